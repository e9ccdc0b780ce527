#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccsched {

// Seconds for every duration, bytes for every size. 1 MB = 1e6 bytes.
inline constexpr double kBytesPerMb = 1e6;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user-supplied configuration (exit code 2 at the CLI).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed trace/profile/report file.
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct GpuId {
    int server = 0;
    int gpu = 0;

    friend auto operator<=>(const GpuId&, const GpuId&) = default;
};

/// Contention-aware All-Reduce parameters. A single All-Reduce of M bytes
/// costs a + b*M; with k tasks sharing a server NIC it costs
/// a + k*b*M + (k-1)*eta*M.
struct CostModel {
    double a = 6.69e-4;
    double b = 8.53e-10;
    double eta = 2e-10;

    void validate() const;
    friend bool operator==(const CostModel&, const CostModel&) = default;
};

/// Per-message latency alpha, per-byte transfer beta, per-byte reduction
/// gamma, for n_nodes participants (power of two).
struct AllReduceParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    int n_nodes = 2;
};

enum class AllReduceAlgorithm { BinaryTree, RecursiveDoubling, RecursiveHalvingDoubling, Ring };

struct DnnProfile {
    std::string name;
    double model_size = 0.0;        // bytes, also the All-Reduce message size
    double gpu_memory_usage = 0.0;  // bytes per worker
    int batch_size = 1;
    std::optional<double> t_forward;   // seconds, measured
    std::optional<double> t_backward;  // seconds, measured
    std::optional<double> lambda_f;
    std::optional<double> lambda_b;
    std::optional<double> peak_perf;  // GFLOPS

    void validate() const;
    friend bool operator==(const DnnProfile&, const DnnProfile&) = default;
};

struct ClusterConfig {
    int n_servers = 16;
    int gpus_per_server = 4;
    double gpu_memory = 16e9;
    CostModel cost_model{};

    int total_gpus() const { return n_servers * gpus_per_server; }
    int flat_index(GpuId id) const { return id.server * gpus_per_server + id.gpu; }
    GpuId gpu_at(int flat) const { return {flat / gpus_per_server, flat % gpus_per_server}; }
    void validate() const;
};

struct JobSpec {
    int job_id = 0;
    double arrival_time = 0.0;
    int n_gpus = 1;
    int iterations = 1;
    DnnProfile profile;

    void validate() const;
    friend bool operator==(const JobSpec&, const JobSpec&) = default;
};

struct GpuState {
    GpuId id;
    double memory_capacity = 0.0;
    double memory_used = 0.0;
    double remaining_workload = 0.0;  // the least-workload ledger
    double busy_until = 0.0;
    double busy_accumulated = 0.0;

    double free_memory() const { return memory_capacity - memory_used; }
};

/// GPU occupancy and workload ledger; servers are implicit in the GpuId.
struct ClusterState {
    ClusterConfig config;
    std::vector<GpuState> gpus;  // flat, server-major

    explicit ClusterState(const ClusterConfig& cfg);

    GpuState& at(GpuId id) { return gpus[config.flat_index(id)]; }
    const GpuState& at(GpuId id) const { return gpus[config.flat_index(id)]; }
    double server_workload(int server) const;
    bool fits(const GpuState& g, const JobSpec& job) const {
        return g.free_memory() >= job.profile.gpu_memory_usage;
    }
};

enum class JobPhase { Queued, Forward, Backward, AllReduce, Done };

struct CommTask {
    int job_id = 0;
    double total_bytes = 0.0;
    double bytes_remaining = 0.0;
    std::vector<int> server_set;  // sorted, distinct, size >= 2
    double started_at = 0.0;
    bool latency_paid = false;
};

// All-Reduce cost without contention: a + b*M.
double allreduce_cost(const CostModel& model, double message);

// a + k*b*M + (k-1)*eta*M. Throws std::invalid_argument for k == 0.
double allreduce_cost_contended(const CostModel& model, double message, int k);

/// Table-driven (a, b) for the classic All-Reduce algorithms, eta = 0.
CostModel derive_allreduce_ab(const AllReduceParams& params, AllReduceAlgorithm algorithm);

struct ComputeDurations {
    double forward = 0.0;
    double backward = 0.0;
};

/// Measured durations when present, else lambda * batch / peak.
ComputeDurations compute_task_durations(const DnnProfile& profile);

/// Contention-free compute time of the whole job: (t_f + t_b) * iterations.
double job_compute_workload(const JobSpec& spec);

/// Contention-free communication time; zero for single-server placements.
double job_comm_workload(const JobSpec& spec, int server_set_size, const CostModel& model);

/// Distinct, sorted server indices of a GPU set.
std::vector<int> servers_of(const std::vector<GpuId>& gpus);

}  // namespace ccsched
