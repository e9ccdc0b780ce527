#include "ccsched/oracle.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <string>
#include <tuple>

#include "ccsched/contention.hpp"

namespace ccsched::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum Stage { kNeedFwd, kRunFwd, kNeedBwd, kRunBwd, kBarrier };
enum Status { kPending, kQueued, kRunning, kDone };

struct OWorker {
    int gpu = 0;
    Stage stage = kNeedFwd;
};

struct OJob {
    Status status = kPending;
    unsigned mask = 0;
    std::vector<int> servers;
    std::vector<OWorker> workers;
    int cursor = 0;
    int bwd_left = 0;
    bool comm_ready = false;
    bool comm_active = false;
    double comm_start = 0.0;
    double comm_cost = 0.0;  // a + b*sigma when multi-server
    double remaining = 0.0;
    double finish = 0.0;
};

struct OGpu {
    int job = -1;
    int worker = 0;
    double end = 0.0;
    double mem_used = 0.0;
};

struct State {
    double now = 0.0;
    LinkState link;
    std::vector<OJob> jobs;
    std::vector<OGpu> gpus;
    std::vector<CommInterval> comm;
};

class Search {
public:
    Search(const ClusterConfig& cluster, const std::vector<JobSpec>& specs, int cap)
        : cfg_(cluster), specs_(specs), cap_(cap)
    {
        for (const auto& s : specs_) durs_.push_back(compute_task_durations(s.profile));
    }

    SmallScheduleOptimum solve()
    {
        State s{0.0, LinkState(cfg_.n_servers, cfg_.cost_model, cap_), {}, {}, {}};
        s.jobs.resize(specs_.size());
        s.gpus.resize(static_cast<size_t>(cfg_.total_gpus()));
        for (size_t i = 0; i < specs_.size(); ++i) {
            const auto& d = durs_[i];
            s.jobs[i].remaining = (d.forward + d.backward) * specs_[i].iterations * specs_[i].n_gpus;
        }
        s.now = specs_.empty() ? 0.0 : specs_.front().arrival_time;
        for (const auto& sp : specs_) s.now = std::min(s.now, sp.arrival_time);
        explore(std::move(s));
        if (best_.leaves == 0 || best_avg_ == kInf) throw Error("brute_force_small_schedule: no feasible schedule");
        best_.avg_jct = best_avg_;
        return best_;
    }

private:
    using Key = std::tuple<double, double, int>;
    Key key(const State& s, int j) const { return {s.jobs[j].remaining, specs_[j].arrival_time, specs_[j].job_id}; }

    std::vector<int> sorted_by_key(const State& s, std::vector<int> idx) const
    {
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return key(s, a) < key(s, b); });
        return idx;
    }

    double lower_bound(const State& s) const
    {
        double total = 0.0;
        for (size_t j = 0; j < specs_.size(); ++j) {
            const auto& job = s.jobs[j];
            const auto& sp = specs_[j];
            if (job.status == kDone) {
                total += job.finish - sp.arrival_time;
                continue;
            }
            const double per_iter = durs_[j].forward + durs_[j].backward + job.comm_cost;
            double lb = std::max(s.now, sp.arrival_time) + (sp.iterations - job.cursor - 1) * per_iter;
            if (job.comm_active) {
                if (const auto* a = s.link.find(sp.job_id))
                    lb += a->latency_remaining + a->task.bytes_remaining * cfg_.cost_model.b;
            } else if (job.status == kRunning && job.comm_ready) {
                lb += job.comm_cost;
            }
            total += lb - sp.arrival_time;
        }
        return total / static_cast<double>(specs_.size());
    }

    // One event instant: arrivals, then placement choices, admission
    // choices, deterministic dispatch, and the jump to the next event.
    void explore(State s)
    {
        if (lower_bound(s) >= best_avg_ * (1.0 - 1e-12)) return;
        for (size_t j = 0; j < specs_.size(); ++j)
            if (s.jobs[j].status == kPending && specs_[j].arrival_time <= s.now) s.jobs[j].status = kQueued;

        std::vector<int> queued;
        for (size_t j = 0; j < specs_.size(); ++j)
            if (s.jobs[j].status == kQueued) queued.push_back(static_cast<int>(j));
        place_step(std::move(s), sorted_by_key(s, queued), 0);
    }

    void place_step(State s, const std::vector<int>& queued, size_t i)
    {
        if (i == queued.size()) {
            std::vector<int> ready;
            for (size_t j = 0; j < specs_.size(); ++j)
                if (s.jobs[j].status == kRunning && s.jobs[j].comm_ready) ready.push_back(static_cast<int>(j));
            auto order = sorted_by_key(s, ready);
            admit_step(std::move(s), order, 0);
            return;
        }
        const int j = queued[i];
        const auto& sp = specs_[j];
        unsigned feasible = 0;
        for (int g = 0; g < cfg_.total_gpus(); ++g)
            if (cfg_.gpu_memory - s.gpus[g].mem_used >= sp.profile.gpu_memory_usage) feasible |= 1u << g;
        bool any = false;
        for (unsigned mask = 1; mask < (1u << cfg_.total_gpus()); ++mask) {
            if ((mask & ~feasible) != 0 || std::popcount(mask) != sp.n_gpus) continue;
            any = true;
            State next = s;
            place(next, j, mask);
            place_step(std::move(next), queued, i + 1);
        }
        if (!any) place_step(std::move(s), queued, i + 1);
    }

    void place(State& s, int j, unsigned mask)
    {
        auto& job = s.jobs[j];
        const auto& sp = specs_[j];
        job.status = kRunning;
        job.mask = mask;
        for (int g = 0; g < cfg_.total_gpus(); ++g) {
            if (!(mask & (1u << g))) continue;
            job.workers.push_back({g, kNeedFwd});
            s.gpus[g].mem_used += sp.profile.gpu_memory_usage;
            const int server = g / cfg_.gpus_per_server;
            if (std::find(job.servers.begin(), job.servers.end(), server) == job.servers.end())
                job.servers.push_back(server);
        }
        job.bwd_left = sp.n_gpus;
        if (job.servers.size() > 1) {
            job.comm_cost = cfg_.cost_model.a + cfg_.cost_model.b * sp.profile.model_size;
            job.remaining += job.comm_cost * sp.iterations * sp.n_gpus;
        }
    }

    bool link_has_room(const State& s, const std::vector<int>& servers) const
    {
        return std::all_of(servers.begin(), servers.end(), [&](int v) { return s.link.active_count(v) < cap_; });
    }

    void admit_step(State s, const std::vector<int>& ready, size_t i)
    {
        if (i == ready.size()) {
            dispatch_and_advance(std::move(s));
            return;
        }
        const int j = ready[i];
        if (link_has_room(s, s.jobs[j].servers)) {
            State started = s;
            start_comm(started, j);
            admit_step(std::move(started), ready, i + 1);
        }
        admit_step(std::move(s), ready, i + 1);
    }

    void start_comm(State& s, int j)
    {
        auto& job = s.jobs[j];
        CommTask t;
        t.job_id = specs_[j].job_id;
        t.total_bytes = t.bytes_remaining = specs_[j].profile.model_size;
        t.server_set = job.servers;
        s.link.admit(std::move(t), s.now);
        job.comm_ready = false;
        job.comm_active = true;
        job.comm_start = s.now;
    }

    void dispatch_and_advance(State s)
    {
        for (int g = 0; g < cfg_.total_gpus(); ++g) {
            if (s.gpus[g].job >= 0) continue;
            int pick = -1;
            int pick_worker = 0;
            for (size_t j = 0; j < specs_.size(); ++j) {
                const auto& job = s.jobs[j];
                if (job.status != kRunning || !(job.mask & (1u << g))) continue;
                for (size_t w = 0; w < job.workers.size(); ++w) {
                    const auto& wk = job.workers[w];
                    if (wk.gpu != g || (wk.stage != kNeedFwd && wk.stage != kNeedBwd)) continue;
                    if (pick < 0 || key(s, static_cast<int>(j)) < key(s, pick)) {
                        pick = static_cast<int>(j);
                        pick_worker = static_cast<int>(w);
                    }
                }
            }
            if (pick < 0) continue;
            auto& wk = s.jobs[pick].workers[pick_worker];
            const bool fwd = wk.stage == kNeedFwd;
            wk.stage = fwd ? kRunFwd : kRunBwd;
            s.gpus[g] = {pick, pick_worker, s.now + (fwd ? durs_[pick].forward : durs_[pick].backward), s.gpus[g].mem_used};
        }

        double t_next = kInf;
        for (const auto& g : s.gpus)
            if (g.job >= 0) t_next = std::min(t_next, g.end);
        for (size_t j = 0; j < specs_.size(); ++j)
            if (s.jobs[j].status == kPending) t_next = std::min(t_next, specs_[j].arrival_time);
        const auto horizon = s.link.next_completion_time();
        const bool comm_next = horizon && s.now + *horizon <= t_next;
        if (comm_next) t_next = s.now + *horizon;

        if (t_next == kInf) {
            bool all_done = std::all_of(s.jobs.begin(), s.jobs.end(), [](const OJob& j) { return j.status == kDone; });
            if (all_done) record_leaf(s);
            return;  // otherwise a dead end: something waits with nothing left to wake it
        }

        auto completed = s.link.advance(comm_next ? *horizon : t_next - s.now);
        s.link.clear_finished();
        s.now = t_next;
        std::sort(completed.begin(), completed.end());
        for (int id : completed) finish_comm(s, index_of(id));
        for (int g = 0; g < cfg_.total_gpus(); ++g) {
            if (s.gpus[g].job >= 0 && s.gpus[g].end <= s.now) finish_compute(s, g);
        }
        if (std::all_of(s.jobs.begin(), s.jobs.end(), [](const OJob& j) { return j.status == kDone; })) {
            record_leaf(s);
            return;
        }
        explore(std::move(s));
    }

    int index_of(int job_id) const
    {
        for (size_t j = 0; j < specs_.size(); ++j)
            if (specs_[j].job_id == job_id) return static_cast<int>(j);
        throw Error("oracle: unknown job id");
    }

    void finish_compute(State& s, int g)
    {
        const int j = s.gpus[g].job;
        auto& job = s.jobs[j];
        auto& wk = job.workers[s.gpus[g].worker];
        s.gpus[g].job = -1;
        if (wk.stage == kRunFwd) {
            job.remaining -= durs_[j].forward;
            wk.stage = kNeedBwd;
            return;
        }
        job.remaining -= durs_[j].backward;
        wk.stage = kBarrier;
        if (--job.bwd_left > 0) return;
        if (job.servers.size() > 1)
            job.comm_ready = true;
        else
            next_iteration(s, j);
    }

    void finish_comm(State& s, int j)
    {
        auto& job = s.jobs[j];
        job.comm_active = false;
        job.remaining -= job.comm_cost * specs_[j].n_gpus;
        s.comm.push_back({specs_[j].job_id, job.cursor, job.comm_start, s.now});
        next_iteration(s, j);
    }

    void next_iteration(State& s, int j)
    {
        auto& job = s.jobs[j];
        const auto& sp = specs_[j];
        if (++job.cursor == sp.iterations) {
            job.status = kDone;
            job.finish = s.now;
            for (const auto& w : job.workers) s.gpus[w.gpu].mem_used -= sp.profile.gpu_memory_usage;
            return;
        }
        job.bwd_left = sp.n_gpus;
        for (auto& w : job.workers) w.stage = kNeedFwd;
    }

    void record_leaf(const State& s)
    {
        ++best_.leaves;
        double total = 0.0;
        for (size_t j = 0; j < specs_.size(); ++j) total += s.jobs[j].finish - specs_[j].arrival_time;
        const double avg = total / static_cast<double>(specs_.size());
        if (avg < best_avg_) {
            best_avg_ = avg;
            best_.placements.clear();
            for (const auto& job : s.jobs) {
                std::vector<GpuId> ids;
                for (const auto& w : job.workers) ids.push_back(cfg_.gpu_at(w.gpu));
                best_.placements.push_back(std::move(ids));
            }
            best_.comm = s.comm;
        }
    }

    ClusterConfig cfg_;
    std::vector<JobSpec> specs_;
    std::vector<ComputeDurations> durs_;
    int cap_;
    double best_avg_ = kInf;
    SmallScheduleOptimum best_;
};

}  // namespace

SmallScheduleOptimum brute_force_small_schedule(const ClusterConfig& cluster, const std::vector<JobSpec>& jobs, int cap)
{
    cluster.validate();
    if (jobs.empty()) throw ConfigError("brute_force_small_schedule: no jobs");
    if (static_cast<int>(jobs.size()) > kSmallMaxJobs) throw ConfigError("brute_force_small_schedule: more than 3 jobs");
    if (cluster.n_servers > kSmallMaxServers || cluster.gpus_per_server > kSmallMaxGpusPerServer)
        throw ConfigError("brute_force_small_schedule: cluster larger than 2x2");
    if (cap < 1) throw ConfigError("brute_force_small_schedule: cap must be >= 1");
    for (const auto& j : jobs) {
        j.validate();
        if (j.iterations > kSmallMaxIterations)
            throw ConfigError("brute_force_small_schedule: more than 2 iterations");
        if (j.n_gpus > cluster.total_gpus())
            throw ConfigError("brute_force_small_schedule: job larger than the cluster");
    }
    return Search(cluster, jobs, cap).solve();
}

}  // namespace ccsched::oracle
