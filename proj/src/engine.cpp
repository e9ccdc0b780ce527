#include "ccsched/engine.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "ccsched/workload.hpp"

namespace ccsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

uint64_t splitmix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

enum class WorkerStage { NeedForward, Forwarding, NeedBackward, Backwarding, AtBarrier };

struct Worker {
    int gpu = 0;  // flat index
    WorkerStage stage = WorkerStage::NeedForward;
    double task_start = 0.0;
};

struct Job {
    JobSpec spec;
    ComputeDurations dur;
    JobPhase phase = JobPhase::Queued;
    std::vector<GpuId> gpus;
    std::vector<int> servers;
    std::vector<Worker> workers;
    int cursor = 0;
    int forwards_left = 0;
    int backwards_left = 0;
    bool comm_ready = false;
    bool comm_active = false;
    double comm_start = 0.0;
    double remaining = 0.0;   // remaining service L_J, seconds x GPUs
    double comm_unit = 0.0;   // ledger share of one All-Reduce
    double placed_at = 0.0;
    double finish = 0.0;

    SrsfKey key() const { return {remaining, spec.arrival_time, spec.job_id}; }
    bool multi_server() const { return servers.size() > 1; }
};

struct Resident {
    int job = 0;
    int worker = 0;
};

enum class EventKind : int { ComputeDone = 1, Arrival = 2 };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int job_id = 0;
    int job = 0;
    int worker = 0;

    // Min-heap on (time, kind rank, job_id).
    bool operator>(const Event& o) const
    {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
        return job_id > o.job_id;
    }
};

class Simulator {
public:
    Simulator(const ClusterConfig& cfg, const std::vector<JobSpec>& trace, const SimOptions& opt)
        : opt_(opt),
          cluster_(cfg),
          link_(cfg.n_servers, cfg.cost_model, opt.scheduler.link_cap(), opt.contention_scope),
          running_(static_cast<size_t>(cfg.total_gpus()), -1),
          residents_(static_cast<size_t>(cfg.total_gpus())),
          dirty_mark_(static_cast<size_t>(cfg.total_gpus()), 0)
    {
        std::set<int> ids;
        jobs_.reserve(trace.size());
        for (const auto& spec : trace) {
            spec.validate();
            if (!ids.insert(spec.job_id).second)
                throw ConfigError("duplicate job_id " + std::to_string(spec.job_id) + " in trace");
            Job j;
            j.spec = spec;
            j.dur = compute_task_durations(spec.profile);
            j.remaining = srsf_priority(spec).remaining_service;
            jobs_.push_back(std::move(j));
        }
        for (int i = 0; i < static_cast<int>(jobs_.size()); ++i) {
            job_index_[jobs_[i].spec.job_id] = i;
            events_.push({jobs_[i].spec.arrival_time, EventKind::Arrival, jobs_[i].spec.job_id, i, 0});
        }
    }

    SimReport run()
    {
        while (finished_ < jobs_.size()) {
            const double t_event = events_.empty() ? kInf : events_.top().time;
            const auto comm_horizon = link_.next_completion_time();
            const double t_comm = comm_horizon ? now_ + *comm_horizon : kInf;
            const double t = std::min(t_event, t_comm);
            if (t == kInf) throw DeadlockError(deadlock_message());

            // Advance by the horizon itself when it is next; (now + c) - now
            // can round below c and leave the task unfinished forever.
            auto completed = link_.advance(t_comm <= t_event ? *comm_horizon : t - now_);
            link_.clear_finished();
            now_ = t;
            std::sort(completed.begin(), completed.end(),
                      [&](int a, int b) { return jobs_[by_id(a)].spec.job_id < jobs_[by_id(b)].spec.job_id; });
            for (int id : completed) on_comm_done(by_id(id));

            while (!events_.empty() && events_.top().time <= now_) {
                const Event e = events_.top();
                events_.pop();
                if (e.kind == EventKind::ComputeDone)
                    on_compute_done(e.job, e.worker);
                else
                    on_arrival(e.job);
            }
            schedule_pass();
        }
        return build_report();
    }

private:
    int by_id(int job_id) const { return job_index_.at(job_id); }

    void mark(int gpu)
    {
        if (!dirty_mark_[gpu]) {
            dirty_mark_[gpu] = 1;
            dirty_.push_back(gpu);
        }
    }

    void charge(Job& j, double amount)
    {
        j.remaining -= amount;
        for (const auto& id : j.gpus) {
            auto& g = cluster_.at(id);
            g.remaining_workload = std::max(0.0, g.remaining_workload - amount);
        }
    }

    void on_arrival(int ji)
    {
        ++counts_.arrivals;
        queue_.push_back(ji);
        placement_dirty_ = true;
    }

    void on_compute_done(int ji, int wi)
    {
        ++counts_.compute_task_done;
        Job& j = jobs_[ji];
        Worker& w = j.workers[wi];
        auto& gpu = cluster_.gpus[w.gpu];
        running_[w.gpu] = -1;
        mark(w.gpu);

        const bool forward = w.stage == WorkerStage::Forwarding;
        const double dur = forward ? j.dur.forward : j.dur.backward;
        gpu.busy_accumulated += dur;
        charge(j, dur);
        if (opt_.record_timeline)
            timeline_.push_back({j.spec.job_id, j.cursor, forward ? TaskKind::Forward : TaskKind::Backward, w.gpu,
                                 w.task_start, now_});

        if (forward) {
            w.stage = WorkerStage::NeedBackward;
            if (--j.forwards_left == 0) j.phase = JobPhase::Backward;
            return;
        }
        w.stage = WorkerStage::AtBarrier;
        if (--j.backwards_left > 0) return;
        if (j.multi_server()) {
            j.comm_ready = true;
            j.phase = JobPhase::AllReduce;
            ready_comm_.push_back(ji);
        } else {
            finish_iteration(ji);
        }
    }

    void on_comm_done(int ji)
    {
        ++counts_.comm_task_done;
        Job& j = jobs_[ji];
        j.comm_active = false;
        charge(j, j.comm_unit);
        if (opt_.record_timeline)
            timeline_.push_back({j.spec.job_id, j.cursor, TaskKind::AllReduce, -1, j.comm_start, now_});
        finish_iteration(ji);
    }

    void finish_iteration(int ji)
    {
        Job& j = jobs_[ji];
        if (++j.cursor == j.spec.iterations) {
            finish_job(ji);
            return;
        }
        j.phase = JobPhase::Forward;
        j.forwards_left = j.backwards_left = static_cast<int>(j.workers.size());
        for (auto& w : j.workers) {
            w.stage = WorkerStage::NeedForward;
            mark(w.gpu);
        }
    }

    void finish_job(int ji)
    {
        Job& j = jobs_[ji];
        j.phase = JobPhase::Done;
        j.finish = now_;
        release_placement(cluster_, j.spec, j.gpus, std::max(0.0, j.remaining));
        for (const auto& w : j.workers) std::erase_if(residents_[w.gpu], [&](const Resident& r) { return r.job == ji; });
        ++finished_;
        placement_dirty_ = true;
    }

    void schedule_pass()
    {
        ++counts_.scheduling_passes;
        if (placement_dirty_) place_queued();
        admit_communication();
        dispatch_compute();
    }

    // Placement only depends on free memory, which only grows when a job
    // finishes, so a failed attempt is retried only after a finish or an arrival.
    void place_queued()
    {
        placement_dirty_ = false;
        if (queue_.empty()) return;
        std::sort(queue_.begin(), queue_.end(), [&](int a, int b) { return jobs_[a].key() < jobs_[b].key(); });
        std::vector<int> still_queued;
        for (int ji : queue_) {
            Job& j = jobs_[ji];
            const uint64_t seed = splitmix64(opt_.seed ^ splitmix64(static_cast<uint64_t>(placement_calls_++)));
            auto gpus = place(opt_.placement, j.spec, cluster_, seed);
            if (gpus.empty()) {
                still_queued.push_back(ji);
                continue;
            }
            start_job(ji, std::move(gpus));
        }
        queue_ = std::move(still_queued);
    }

    void start_job(int ji, std::vector<GpuId> gpus)
    {
        Job& j = jobs_[ji];
        const auto& cfg = cluster_.config;
        j.gpus = std::move(gpus);
        j.servers = servers_of(j.gpus);
        const int n = j.spec.n_gpus;
        const double compute = job_compute_workload(j.spec);
        const double comm = job_comm_workload(j.spec, static_cast<int>(j.servers.size()), cfg.cost_model);
        j.remaining = (compute + comm) * n;
        j.comm_unit = j.multi_server() ? allreduce_cost(cfg.cost_model, j.spec.profile.model_size) * n : 0.0;
        commit_placement(cluster_, j.spec, j.gpus, j.remaining);

        j.phase = JobPhase::Forward;
        j.placed_at = now_;
        j.forwards_left = j.backwards_left = n;
        j.workers.clear();
        for (const auto& id : j.gpus) {
            const int flat = cfg.flat_index(id);
            j.workers.push_back({flat, WorkerStage::NeedForward, 0.0});
            residents_[flat].push_back({ji, static_cast<int>(j.workers.size()) - 1});
            mark(flat);
        }
    }

    void admit_communication()
    {
        if (ready_comm_.empty()) return;
        std::sort(ready_comm_.begin(), ready_comm_.end(), [&](int a, int b) { return jobs_[a].key() < jobs_[b].key(); });
        std::vector<int> waiting;
        for (int ji : ready_comm_) {
            Job& j = jobs_[ji];
            CommTask task;
            task.job_id = j.spec.job_id;
            task.total_bytes = task.bytes_remaining = j.spec.profile.model_size;
            task.server_set = j.servers;
            const auto decision = opt_.scheduler.decide(link_, task, cluster_.config.cost_model);
            ++counts_.admission_decisions[to_string(decision.reason)];
            if (!decision.start_now) {
                waiting.push_back(ji);
                continue;
            }
            link_.admit(std::move(task), now_);
            j.comm_ready = false;
            j.comm_active = true;
            j.comm_start = now_;
        }
        ready_comm_ = std::move(waiting);
        counts_.max_server_comm_concurrency = std::max(counts_.max_server_comm_concurrency, link_.max_active_count());
    }

    void dispatch_compute()
    {
        std::sort(dirty_.begin(), dirty_.end());
        for (int gpu : dirty_) {
            dirty_mark_[gpu] = 0;
            if (running_[gpu] >= 0) continue;
            const Resident* best = nullptr;
            for (const auto& r : residents_[gpu]) {
                const auto stage = jobs_[r.job].workers[r.worker].stage;
                if (stage != WorkerStage::NeedForward && stage != WorkerStage::NeedBackward) continue;
                if (best == nullptr || jobs_[r.job].key() < jobs_[best->job].key()) best = &r;
            }
            if (best == nullptr) continue;
            Job& j = jobs_[best->job];
            Worker& w = j.workers[best->worker];
            const bool forward = w.stage == WorkerStage::NeedForward;
            w.stage = forward ? WorkerStage::Forwarding : WorkerStage::Backwarding;
            w.task_start = now_;
            running_[gpu] = best->job;
            const double end = now_ + (forward ? j.dur.forward : j.dur.backward);
            cluster_.gpus[gpu].busy_until = end;
            events_.push({end, EventKind::ComputeDone, j.spec.job_id, best->job, best->worker});
        }
        dirty_.clear();
    }

    std::string deadlock_message() const
    {
        std::string msg = "deadlock at t=" + std::to_string(now_) + ": " +
                          std::to_string(jobs_.size() - finished_) + " unfinished job(s)";
        if (!queue_.empty()) {
            msg += "; unplaceable:";
            for (int ji : queue_)
                msg += " " + std::to_string(jobs_[ji].spec.job_id) + "(" + std::to_string(jobs_[ji].spec.n_gpus) + " GPUs)";
        }
        if (!ready_comm_.empty()) msg += "; " + std::to_string(ready_comm_.size()) + " All-Reduce(s) never admitted";
        return msg;
    }

    SimReport build_report()
    {
        SimReport r;
        r.placement = opt_.placement.to_string();
        r.scheduler = opt_.scheduler.to_string();
        r.seed = opt_.seed;
        std::vector<JobSpec> specs;
        for (const auto& j : jobs_) specs.push_back(j.spec);
        r.trace_fingerprint = trace_fingerprint(specs);

        for (const auto& j : jobs_) {
            JobRecord jr;
            jr.job_id = j.spec.job_id;
            jr.profile = j.spec.profile.name;
            jr.n_gpus = j.spec.n_gpus;
            jr.iterations = j.spec.iterations;
            jr.arrival = j.spec.arrival_time;
            jr.placed = j.placed_at;
            jr.finish = j.finish;
            jr.jct = j.finish - j.spec.arrival_time;
            jr.compute_lower_bound = job_compute_workload(j.spec);
            jr.gpus = j.gpus;
            r.jobs.push_back(std::move(jr));
        }
        std::sort(r.jobs.begin(), r.jobs.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });

        std::vector<double> busy;
        for (const auto& g : cluster_.gpus) busy.push_back(g.busy_accumulated);
        r.aggregates = compute_metrics(r.jobs, busy);
        const double horizon = r.aggregates.horizon_end - r.aggregates.horizon_start;
        for (const auto& g : cluster_.gpus)
            r.gpus.push_back({g.id, g.busy_accumulated, horizon > 0.0 ? std::clamp(g.busy_accumulated / horizon, 0.0, 1.0) : 0.0});
        r.counts = counts_;
        r.timeline = std::move(timeline_);
        return r;
    }

    SimOptions opt_;
    ClusterState cluster_;
    LinkState link_;
    std::vector<Job> jobs_;
    std::map<int, int> job_index_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::vector<int> running_;
    std::vector<std::vector<Resident>> residents_;
    std::vector<int> dirty_;
    std::vector<char> dirty_mark_;
    std::vector<int> queue_;
    std::vector<int> ready_comm_;
    bool placement_dirty_ = false;
    uint64_t placement_calls_ = 0;
    size_t finished_ = 0;
    double now_ = 0.0;
    EventCounts counts_;
    std::vector<TaskRecord> timeline_;
};

}  // namespace

SimReport run_sim(const ClusterConfig& cluster, const std::vector<JobSpec>& trace, const SimOptions& options)
{
    cluster.validate();
    Simulator sim(cluster, trace, options);
    return sim.run();
}

}  // namespace ccsched
