#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsched/model.hpp"

namespace ccsched {

enum class PlacementKind { LeastWorkloadFirst, FirstFit, ListScheduling, Random };

/// Parsed from "lwf:<kappa>", "ff", "ls" or "rand".
struct PlacementPolicy {
    PlacementKind kind = PlacementKind::LeastWorkloadFirst;
    int kappa = 1;

    static PlacementPolicy parse(const std::string& text);
    std::string to_string() const;
    friend bool operator==(const PlacementPolicy&, const PlacementPolicy&) = default;
};

// Placement functions never mutate the cluster. An empty result means the
// job cannot be placed right now; otherwise the result holds exactly
// job.n_gpus distinct memory-feasible GPUs, sorted by (server, gpu).

/// Least-workload-first. Jobs needing at most kappa GPUs take the globally
/// least-loaded GPUs; larger jobs walk servers in ascending total workload
/// and take each server's feasible GPUs in ascending workload.
/// Ties are broken by (workload, server, gpu).
std::vector<GpuId> lwf_place(const JobSpec& job, int kappa, const ClusterState& cluster);

/// First n feasible GPUs in (server, gpu) order.
std::vector<GpuId> ff_place(const JobSpec& job, const ClusterState& cluster);

/// The n feasible GPUs with the least ledger workload, cluster-wide.
std::vector<GpuId> ls_place(const JobSpec& job, const ClusterState& cluster);

/// n feasible GPUs sampled uniformly without replacement.
std::vector<GpuId> rand_place(const JobSpec& job, const ClusterState& cluster, uint64_t rng_seed);

std::vector<GpuId> place(const PlacementPolicy& policy, const JobSpec& job, const ClusterState& cluster,
                         uint64_t rng_seed);

/// Reserves memory on the chosen GPUs and adds `workload` to each of their ledgers.
void commit_placement(ClusterState& cluster, const JobSpec& job, const std::vector<GpuId>& gpus, double workload);

/// Frees the job's memory and removes whatever it still holds in the ledgers.
void release_placement(ClusterState& cluster, const JobSpec& job, const std::vector<GpuId>& gpus,
                       double residual_workload);

/// Shortest-remaining-service-first ordering key; smaller runs first.
struct SrsfKey {
    double remaining_service = 0.0;
    double arrival_time = 0.0;
    int job_id = 0;

    friend auto operator<=>(const SrsfKey&, const SrsfKey&) = default;
};

/// Key for a job that has not been placed: compute workload times GPU count,
/// communication excluded.
SrsfKey srsf_priority(const JobSpec& job);

}  // namespace ccsched
