#include "ccsched/oracle.hpp"

#include <stdexcept>

#include "ccsched/contention.hpp"

namespace ccsched::oracle {

namespace {

CommTask two_server_task(int job_id, double bytes)
{
    CommTask t;
    t.job_id = job_id;
    t.total_bytes = t.bytes_remaining = bytes;
    t.server_set = {0, 1};
    return t;
}

// Runs the pair on `link` (already reset) and returns the mean finish time.
double run_pair(LinkState& link, double first_bytes, double second_bytes, double offset)
{
    double finish[2] = {-1.0, -1.0};
    double now = 0.0;
    auto record = [&](const std::vector<int>& done) {
        for (int id : done) finish[id] = now;
    };

    link.admit(two_server_task(0, first_bytes), 0.0);
    // The first task runs alone up to the offset and may finish exactly on it.
    while (!link.empty() && now < offset) {
        const double dt = std::min(*link.next_completion_time(), offset - now);
        auto done = link.advance(dt);
        now += dt;
        record(done);
    }
    now = offset;
    link.admit(two_server_task(1, second_bytes), now);
    while (!link.empty()) {
        const double dt = *link.next_completion_time();
        auto done = link.advance(dt);
        now += dt;
        record(done);
    }
    link.clear_finished();
    return (finish[0] + finish[1]) / 2.0;
}

}  // namespace

double simulate_pair(double first_bytes, double second_bytes, double offset, const CostModel& model)
{
    LinkState link(2, model, 2);
    return run_pair(link, first_bytes, second_bytes, offset);
}

DualSearchResult brute_force_dual(const DualTaskInstance& inst, int grid)
{
    inst.validate();
    if (grid < 100) throw ConfigError("brute_force_dual: grid must be >= 100");
    const CostModel model{0.0, inst.b, inst.eta};
    LinkState link(2, model, 2);

    DualSearchResult best;
    bool have = false;
    auto consider = [&](DualCase c, double offset, double value) {
        if (!have || value < best.best_t_aver) {
            best = {c, value, offset};
            have = true;
        }
    };

    // Small task first.
    const double span1 = inst.b * inst.m1;
    for (int i = 0; i <= grid; ++i) {
        const double t = span1 * i / grid;
        link.reset();
        consider(DualCase::C1, t, run_pair(link, inst.m1, inst.m2, t));
    }
    // Large task first; the small one is fully overlapped while t <= b (m2 - m1).
    const double span2 = inst.b * inst.m2;
    const double overlap_limit = inst.b * (inst.m2 - inst.m1);
    for (int i = 0; i <= grid; ++i) {
        const double t = span2 * i / grid;
        link.reset();
        consider(t <= overlap_limit ? DualCase::C2a : DualCase::C2b, t, run_pair(link, inst.m2, inst.m1, t));
    }
    return best;
}

std::vector<DualSearchResult> brute_force_dual_batch_serial(std::span<const DualTaskInstance> instances, int grid)
{
    std::vector<DualSearchResult> out(instances.size());
    for (size_t i = 0; i < instances.size(); ++i) out[i] = brute_force_dual(instances[i], grid);
    return out;
}

std::vector<DualSearchResult> brute_force_dual_batch(std::span<const DualTaskInstance> instances, int grid)
{
    for (const auto& inst : instances) inst.validate();
    if (grid < 100) throw ConfigError("brute_force_dual: grid must be >= 100");
    std::vector<DualSearchResult> out(instances.size());
    const auto n = static_cast<long>(instances.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < n; ++i) out[static_cast<size_t>(i)] = brute_force_dual(instances[static_cast<size_t>(i)], grid);
    return out;
}

}  // namespace ccsched::oracle
