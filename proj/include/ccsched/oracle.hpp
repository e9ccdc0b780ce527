#pragma once

#include <span>
#include <vector>

#include "ccsched/model.hpp"
#include "ccsched/scheduling.hpp"

// Brute-force references for tests. Nothing here calls the placement,
// scheduling or engine code; simulations go through LinkState only.

namespace ccsched::oracle {

struct DualSearchResult {
    DualCase best_case = DualCase::C1;
    double best_t_aver = 0.0;
    double best_offset = 0.0;  // start time of the second task
};

/// Grid search over the start offset of the second task for both orders
/// (small first over [0, b*m1], large first over [0, b*m2]), each point
/// simulated exactly on a two-server link with a = 0. grid >= 100.
DualSearchResult brute_force_dual(const DualTaskInstance& inst, int grid);

/// Average completion time of the pair when `first` starts at 0 and
/// `second` at `offset`, simulated on the link model.
double simulate_pair(double first_bytes, double second_bytes, double offset, const CostModel& model);

/// Serial reference and OpenMP-parallel batch; both return results in input order.
std::vector<DualSearchResult> brute_force_dual_batch_serial(std::span<const DualTaskInstance> instances, int grid);
std::vector<DualSearchResult> brute_force_dual_batch(std::span<const DualTaskInstance> instances, int grid);

struct CommInterval {
    int job_id = 0;
    int iteration = 0;
    double start = 0.0;
    double end = 0.0;
};

struct SmallScheduleOptimum {
    double avg_jct = 0.0;
    std::vector<std::vector<GpuId>> placements;  // per input job
    std::vector<CommInterval> comm;              // All-Reduces of the best schedule
    long leaves = 0;                             // complete schedules evaluated
};

inline constexpr int kSmallMaxJobs = 3;
inline constexpr int kSmallMaxIterations = 2;
inline constexpr int kSmallMaxServers = 2;
inline constexpr int kSmallMaxGpusPerServer = 2;

/// Exhaustive search over every placement of every job and every sequence
/// of start/wait decisions for ready All-Reduces (at most `cap` concurrent
/// tasks per server), with work-conserving SRSF compute dispatch.
/// Throws ConfigError above 3 jobs, 2 iterations or 2x2 GPUs.
SmallScheduleOptimum brute_force_small_schedule(const ClusterConfig& cluster, const std::vector<JobSpec>& jobs,
                                                int cap = 2);

}  // namespace ccsched::oracle
