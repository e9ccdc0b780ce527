#include "ccsched/placement.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>
#include <tuple>

namespace ccsched {

namespace {

std::vector<int> feasible_indices(const JobSpec& job, const ClusterState& cluster)
{
    std::vector<int> out;
    out.reserve(cluster.gpus.size());
    for (size_t i = 0; i < cluster.gpus.size(); ++i)
        if (cluster.fits(cluster.gpus[i], job)) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<GpuId> to_sorted_ids(const ClusterState& cluster, std::vector<int> flat)
{
    std::sort(flat.begin(), flat.end());
    std::vector<GpuId> out;
    out.reserve(flat.size());
    for (int f : flat) out.push_back(cluster.config.gpu_at(f));
    return out;
}

// Flat indices are server-major, so comparing them is comparing (server, gpu).
std::vector<int> least_loaded(const ClusterState& cluster, std::vector<int> candidates, int n)
{
    auto by_load = [&](int x, int y) {
        return std::tie(cluster.gpus[x].remaining_workload, x) < std::tie(cluster.gpus[y].remaining_workload, y);
    };
    std::partial_sort(candidates.begin(), candidates.begin() + n, candidates.end(), by_load);
    candidates.resize(static_cast<size_t>(n));
    return candidates;
}

}  // namespace

PlacementPolicy PlacementPolicy::parse(const std::string& text)
{
    if (text == "ff") return {PlacementKind::FirstFit, 1};
    if (text == "ls") return {PlacementKind::ListScheduling, 1};
    if (text == "rand") return {PlacementKind::Random, 1};
    if (text.rfind("lwf:", 0) == 0) {
        const std::string num = text.substr(4);
        int kappa = 0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), kappa);
        if (ec != std::errc{} || ptr != num.data() + num.size() || kappa < 1)
            throw ConfigError("placement '" + text + "': kappa must be an integer >= 1");
        return {PlacementKind::LeastWorkloadFirst, kappa};
    }
    throw ConfigError("unknown placement policy '" + text + "' (expected lwf:<kappa>|ff|ls|rand)");
}

std::string PlacementPolicy::to_string() const
{
    switch (kind) {
    case PlacementKind::LeastWorkloadFirst: return "lwf:" + std::to_string(kappa);
    case PlacementKind::FirstFit: return "ff";
    case PlacementKind::ListScheduling: return "ls";
    case PlacementKind::Random: return "rand";
    }
    return "?";
}

std::vector<GpuId> lwf_place(const JobSpec& job, int kappa, const ClusterState& cluster)
{
    const int n = job.n_gpus;
    if (n <= kappa) {
        auto avail = feasible_indices(job, cluster);
        if (static_cast<int>(avail.size()) < n) return {};
        return to_sorted_ids(cluster, least_loaded(cluster, std::move(avail), n));
    }

    const auto& cfg = cluster.config;
    std::vector<std::pair<double, int>> servers;
    servers.reserve(static_cast<size_t>(cfg.n_servers));
    for (int s = 0; s < cfg.n_servers; ++s) servers.emplace_back(cluster.server_workload(s), s);
    std::sort(servers.begin(), servers.end());

    // Walk the whole sorted list rather than only the first ceil(n / N_g)
    // servers, so memory-fragmented servers do not block placement.
    std::vector<int> chosen;
    chosen.reserve(static_cast<size_t>(n));
    std::vector<int> local;
    for (const auto& [_, s] : servers) {
        local.clear();
        for (int g = 0; g < cfg.gpus_per_server; ++g) {
            const int f = s * cfg.gpus_per_server + g;
            if (cluster.fits(cluster.gpus[f], job)) local.push_back(f);
        }
        std::sort(local.begin(), local.end(), [&](int x, int y) {
            return std::tie(cluster.gpus[x].remaining_workload, x) < std::tie(cluster.gpus[y].remaining_workload, y);
        });
        for (int f : local) {
            if (static_cast<int>(chosen.size()) == n) break;
            chosen.push_back(f);
        }
        if (static_cast<int>(chosen.size()) == n) return to_sorted_ids(cluster, std::move(chosen));
    }
    return {};
}

std::vector<GpuId> ff_place(const JobSpec& job, const ClusterState& cluster)
{
    auto avail = feasible_indices(job, cluster);
    if (static_cast<int>(avail.size()) < job.n_gpus) return {};
    avail.resize(static_cast<size_t>(job.n_gpus));
    return to_sorted_ids(cluster, std::move(avail));
}

std::vector<GpuId> ls_place(const JobSpec& job, const ClusterState& cluster)
{
    auto avail = feasible_indices(job, cluster);
    if (static_cast<int>(avail.size()) < job.n_gpus) return {};
    return to_sorted_ids(cluster, least_loaded(cluster, std::move(avail), job.n_gpus));
}

std::vector<GpuId> rand_place(const JobSpec& job, const ClusterState& cluster, uint64_t rng_seed)
{
    auto avail = feasible_indices(job, cluster);
    const int n = job.n_gpus;
    if (static_cast<int>(avail.size()) < n) return {};
    std::mt19937_64 rng(rng_seed);
    // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
    for (int i = 0; i < n; ++i) {
        std::uniform_int_distribution<size_t> pick(static_cast<size_t>(i), avail.size() - 1);
        std::swap(avail[static_cast<size_t>(i)], avail[pick(rng)]);
    }
    avail.resize(static_cast<size_t>(n));
    return to_sorted_ids(cluster, std::move(avail));
}

std::vector<GpuId> place(const PlacementPolicy& policy, const JobSpec& job, const ClusterState& cluster,
                         uint64_t rng_seed)
{
    switch (policy.kind) {
    case PlacementKind::LeastWorkloadFirst: return lwf_place(job, policy.kappa, cluster);
    case PlacementKind::FirstFit: return ff_place(job, cluster);
    case PlacementKind::ListScheduling: return ls_place(job, cluster);
    case PlacementKind::Random: return rand_place(job, cluster, rng_seed);
    }
    return {};
}

void commit_placement(ClusterState& cluster, const JobSpec& job, const std::vector<GpuId>& gpus, double workload)
{
    for (const auto& id : gpus) {
        auto& g = cluster.at(id);
        if (!cluster.fits(g, job))
            throw Error("commit_placement: GPU (" + std::to_string(id.server) + "," + std::to_string(id.gpu) +
                        ") lacks memory for job " + std::to_string(job.job_id));
        g.memory_used += job.profile.gpu_memory_usage;
        g.remaining_workload += workload;
    }
}

void release_placement(ClusterState& cluster, const JobSpec& job, const std::vector<GpuId>& gpus,
                       double residual_workload)
{
    for (const auto& id : gpus) {
        auto& g = cluster.at(id);
        g.memory_used = std::max(0.0, g.memory_used - job.profile.gpu_memory_usage);
        g.remaining_workload = std::max(0.0, g.remaining_workload - residual_workload);
    }
}

SrsfKey srsf_priority(const JobSpec& job)
{
    return {job_compute_workload(job) * job.n_gpus, job.arrival_time, job.job_id};
}

}  // namespace ccsched
