#pragma once

#include <cstdint>
#include <vector>

#include "ccsched/contention.hpp"
#include "ccsched/model.hpp"
#include "ccsched/placement.hpp"
#include "ccsched/report.hpp"
#include "ccsched/scheduling.hpp"

namespace ccsched {

/// A run ended with unfinished jobs and nothing left that could make progress.
class DeadlockError : public Error {
public:
    using Error::Error;
};

struct SimOptions {
    PlacementPolicy placement{};
    SchedulerPolicy scheduler{};
    uint64_t seed = 0;  // feeds the RAND placement stream
    ContentionScope contention_scope = ContentionScope::TaskServers;
    bool record_timeline = false;
};

/// Discrete-event simulation of the whole trace.
///
/// Each iteration of a job is one forward and one backward task per worker
/// GPU, joined by a barrier into one All-Reduce when the job spans more than
/// one server. After every batch of simultaneous events the scheduler runs
/// one pass: place queued jobs in SRSF order, offer ready All-Reduces to the
/// communication policy in SRSF order, then give every idle GPU the ready
/// compute task of its SRSF-first resident job.
///
/// Throws DeadlockError when jobs remain but no event is pending.
SimReport run_sim(const ClusterConfig& cluster, const std::vector<JobSpec>& trace, const SimOptions& options);

}  // namespace ccsched
