#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ccsched/engine.hpp"

namespace ccsched {

struct SweepCase {
    const std::vector<JobSpec>* trace = nullptr;
    SimOptions options{};
};

/// Runs every case on the same cluster; results are in input order.
/// The parallel version spreads cases over OpenMP threads.
std::vector<SimReport> run_sweep(const ClusterConfig& cluster, std::span<const SweepCase> cases);
std::vector<SimReport> run_sweep_serial(const ClusterConfig& cluster, std::span<const SweepCase> cases);

}  // namespace ccsched
