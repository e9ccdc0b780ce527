#include "doctest.h"

#include <algorithm>
#include <map>

#include "ccsched/engine.hpp"
#include "ccsched/profiles.hpp"
#include "ccsched/workload.hpp"

using namespace ccsched;

namespace {

JobSpec make_job(int id, const DnnProfile& p, int n, int iterations, double arrival)
{
    JobSpec j;
    j.job_id = id;
    j.profile = p;
    j.n_gpus = n;
    j.iterations = iterations;
    j.arrival_time = arrival;
    return j;
}

DnnProfile synthetic(const char* name, double bytes, double tf, double tb, double mem = 1e9)
{
    DnnProfile p;
    p.name = name;
    p.model_size = bytes;
    p.gpu_memory_usage = mem;
    p.t_forward = tf;
    p.t_backward = tb;
    return p;
}

ClusterConfig cluster(int servers, int gpus)
{
    ClusterConfig c;
    c.n_servers = servers;
    c.gpus_per_server = gpus;
    return c;
}

SimOptions options(const char* placement, const char* scheduler, bool timeline = false)
{
    SimOptions o;
    o.placement = PlacementPolicy::parse(placement);
    o.scheduler = SchedulerPolicy::parse(scheduler);
    o.record_timeline = timeline;
    return o;
}

std::vector<JobSpec> small_trace(uint64_t seed)
{
    TraceConfig cfg = TraceConfig::defaults();
    cfg.total_jobs = 24;
    cfg.arrival_window = 60;
    cfg.iterations_min = 20;
    cfg.iterations_max = 120;
    cfg.gpu_count_histogram = {{1, 8}, {2, 4}, {4, 4}, {8, 5}, {16, 3}};
    cfg.seed = seed;
    return generate_trace(cfg);
}

}  // namespace

TEST_CASE("single-GPU job runs back to back")
{
    const auto resnet = ProfileRegistry::builtin().get("ResNet-50");
    const auto r = run_sim(ClusterConfig{}, {make_job(0, resnet, 1, 10, 0.0)}, options("lwf:1", "ada-srsf"));
    REQUIRE(r.jobs.size() == 1);
    CHECK(r.jobs[0].jct == doctest::Approx(0.624).epsilon(1e-12));
    const auto& gpu = r.gpus[0];
    CHECK(gpu.id == GpuId{0, 0});
    CHECK(gpu.utilization == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.counts.compute_task_done == 20);
    CHECK(r.counts.comm_task_done == 0);
}

TEST_CASE("two-server job pays one All-Reduce per iteration")
{
    const auto vgg = ProfileRegistry::builtin().get("VGG-16");
    const auto c = cluster(2, 1);
    for (int iters : {1, 7}) {
        const auto r = run_sim(c, {make_job(0, vgg, 2, iters, 0.0)}, options("lwf:1", "ada-srsf"));
        const double per_iter = (0.0358 + 0.0537) + (6.69e-4 + 8.53e-10 * 5.264e8);
        CHECK(r.jobs[0].jct == doctest::Approx(iters * per_iter).epsilon(1e-12));
        CHECK(r.counts.comm_task_done == iters);
        CHECK(r.counts.compute_task_done == 2L * 2 * iters);
    }
}

TEST_CASE("empty trace gives an empty report")
{
    const auto r = run_sim(ClusterConfig{}, {}, options("lwf:1", "ada-srsf"));
    CHECK(r.jobs.empty());
    CHECK(r.aggregates.n_jobs == 0);
    CHECK(r.counts.arrivals == 0);
}

TEST_CASE("an unplaceable job is reported as a deadlock")
{
    const auto resnet = ProfileRegistry::builtin().get("ResNet-50");
    CHECK_THROWS_AS(run_sim(cluster(1, 2), {make_job(0, resnet, 4, 1, 0.0)}, options("lwf:1", "ada-srsf")),
                    DeadlockError);
}

TEST_CASE("duplicate job ids are rejected")
{
    const auto resnet = ProfileRegistry::builtin().get("ResNet-50");
    CHECK_THROWS_AS(run_sim(ClusterConfig{}, {make_job(1, resnet, 1, 1, 0.0), make_job(1, resnet, 1, 1, 0.0)},
                            options("lwf:1", "ada-srsf")),
                    ConfigError);
}

TEST_CASE("a small All-Reduce joins a large one only under AdaDUAL")
{
    // Job 0 starts a 1e8-byte All-Reduce at t = 1.002; job 1 wants to start a
    // 2e7-byte one at t = 1.005 on the same two servers.
    const auto big = synthetic("big", 1e8, 0.001, 0.001);
    const auto small = synthetic("small", 2e7, 0.001, 0.001);
    const std::vector<JobSpec> trace{make_job(0, big, 2, 1, 1.0), make_job(1, small, 2, 1, 1.003)};
    const auto c = cluster(2, 1);

    auto comm_of = [](const SimReport& r, int job) {
        for (const auto& t : r.timeline)
            if (t.kind == TaskKind::AllReduce && t.job_id == job) return t;
        FAIL("no All-Reduce recorded");
        return TaskRecord{};
    };

    const auto ada = run_sim(c, trace, options("lwf:1", "ada-srsf", true));
    CHECK(comm_of(ada, 1).start == doctest::Approx(1.005));
    CHECK(comm_of(ada, 1).start < comm_of(ada, 0).end);
    CHECK(ada.counts.admission_decisions.at("threshold-accept") == 1);
    CHECK(ada.counts.max_server_comm_concurrency == 2);

    const auto serial = run_sim(c, trace, options("lwf:1", "srsf:1", true));
    CHECK(comm_of(serial, 1).start == doctest::Approx(comm_of(serial, 0).end));
    CHECK(serial.counts.max_server_comm_concurrency == 1);

    // With the roles reversed the large newcomer has to wait.
    const std::vector<JobSpec> reversed{make_job(0, small, 2, 1, 1.0), make_job(1, big, 2, 1, 1.0005)};
    const auto ada2 = run_sim(c, reversed, options("lwf:1", "ada-srsf", true));
    CHECK(comm_of(ada2, 1).start == doctest::Approx(comm_of(ada2, 0).end));
}

TEST_CASE("report invariants on random traces")
{
    for (uint64_t seed : {1u, 2u, 3u}) {
        const auto trace = small_trace(seed);
        for (const char* placement : {"lwf:1", "ff", "ls", "rand"}) {
            for (const char* scheduler : {"ada-srsf", "srsf:1", "srsf:2", "srsf:3"}) {
                CAPTURE(seed);
                CAPTURE(placement);
                CAPTURE(scheduler);
                const auto r = run_sim(ClusterConfig{}, trace, options(placement, scheduler, true));
                REQUIRE(r.jobs.size() == trace.size());

                long compute = 0, comm = 0;
                for (const auto& j : r.jobs) {
                    CHECK(j.jct >= j.compute_lower_bound * (1 - 1e-12));
                    CHECK(j.placed >= j.arrival);
                    CHECK(static_cast<int>(j.gpus.size()) == j.n_gpus);
                    compute += 2L * j.iterations * j.n_gpus;
                    if (servers_of(j.gpus).size() > 1) comm += j.iterations;
                }
                CHECK(r.counts.compute_task_done == compute);
                CHECK(r.counts.comm_task_done == comm);
                CHECK(r.counts.arrivals == static_cast<long>(trace.size()));
                CHECK(r.counts.max_server_comm_concurrency <= SchedulerPolicy::parse(scheduler).link_cap());
                CHECK(r.aggregates.avg_gpu_utilization > 0.0);
                CHECK(r.aggregates.avg_gpu_utilization <= 1.0);
            }
        }
    }
}

TEST_CASE("task timeline respects the iteration DAG and GPU exclusivity")
{
    const auto trace = small_trace(9);
    const auto r = run_sim(ClusterConfig{}, trace, options("lwf:1", "ada-srsf", true));

    struct Iter {
        double fwd_end_max = 0, bwd_start_min = 1e300, bwd_end_max = 0, next_fwd_start_min = 1e300;
        double comm_start = -1, comm_end = -1;
        int fwd = 0, bwd = 0;
    };
    std::map<std::pair<int, int>, Iter> iters;
    std::map<std::pair<int, int>, std::vector<std::pair<double, double>>> per_worker;  // (job, gpu)
    std::map<int, std::vector<std::pair<double, double>>> per_gpu;
    for (const auto& t : r.timeline) {
        auto& it = iters[{t.job_id, t.iteration}];
        if (t.kind == TaskKind::AllReduce) {
            it.comm_start = t.start;
            it.comm_end = t.end;
            continue;
        }
        per_gpu[t.gpu_flat].emplace_back(t.start, t.end);
        per_worker[{t.job_id, t.gpu_flat}].emplace_back(t.start, t.end);
        if (t.kind == TaskKind::Forward) {
            ++it.fwd;
            it.fwd_end_max = std::max(it.fwd_end_max, t.end);
            if (t.iteration > 0) {
                auto& prev = iters[{t.job_id, t.iteration - 1}];
                prev.next_fwd_start_min = std::min(prev.next_fwd_start_min, t.start);
            }
        } else {
            ++it.bwd;
            it.bwd_start_min = std::min(it.bwd_start_min, t.start);
            it.bwd_end_max = std::max(it.bwd_end_max, t.end);
        }
    }
    for (const auto& j : r.jobs) {
        const bool multi = servers_of(j.gpus).size() > 1;
        for (int i = 0; i < j.iterations; ++i) {
            const auto& it = iters.at({j.job_id, i});
            CHECK(it.fwd == j.n_gpus);
            CHECK(it.bwd == j.n_gpus);
            const double iter_end = multi ? it.comm_end : it.bwd_end_max;
            if (multi) {
                CHECK(it.comm_start >= it.bwd_end_max);
                CHECK(it.comm_end > it.comm_start);
            } else {
                CHECK(it.comm_start < 0);
            }
            if (i + 1 < j.iterations) CHECK(it.next_fwd_start_min >= iter_end);
            if (i + 1 == j.iterations) CHECK(iter_end == doctest::Approx(j.finish));
        }
    }
    // Each worker alternates forward and backward, and a GPU runs one task at a time.
    for (auto& [key, v] : per_worker) {
        std::sort(v.begin(), v.end());
        for (size_t i = 1; i < v.size(); ++i) CHECK(v[i].first >= v[i - 1].second);
    }
    for (auto& [gpu, v] : per_gpu) {
        std::sort(v.begin(), v.end());
        for (size_t i = 1; i < v.size(); ++i) CHECK(v[i].first >= v[i - 1].second - 1e-12);
    }
}

TEST_CASE("identical inputs give identical reports")
{
    const auto trace = small_trace(4);
    for (const char* placement : {"lwf:1", "rand"}) {
        auto o = options(placement, "ada-srsf");
        o.seed = 77;
        const auto a = report_to_json(run_sim(ClusterConfig{}, trace, o)).dump();
        const auto b = report_to_json(run_sim(ClusterConfig{}, trace, o)).dump();
        CHECK(a == b);
    }
    auto o1 = options("rand", "ada-srsf");
    auto o2 = o1;
    o1.seed = 1;
    o2.seed = 2;
    const auto r1 = run_sim(ClusterConfig{}, trace, o1);
    const auto r2 = run_sim(ClusterConfig{}, trace, o2);
    bool differs = false;
    for (size_t i = 0; i < r1.jobs.size(); ++i) differs |= r1.jobs[i].gpus != r2.jobs[i].gpus;
    CHECK(differs);
}

TEST_CASE("global contention scope runs to completion")
{
    const auto trace = small_trace(5);
    auto local = options("lwf:1", "srsf:2");
    auto global = local;
    global.contention_scope = ContentionScope::Global;
    const auto a = run_sim(ClusterConfig{}, trace, local);
    const auto b = run_sim(ClusterConfig{}, trace, global);
    CHECK(b.counts.compute_task_done == a.counts.compute_task_done);
    CHECK(b.aggregates.horizon_end > 0.0);
}
