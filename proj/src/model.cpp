#include "ccsched/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ccsched {

void CostModel::validate() const
{
    if (!(a >= 0.0)) throw ConfigError("cost model: a must be >= 0");
    if (!(b > 0.0)) throw ConfigError("cost model: b must be > 0");
    if (!(eta >= 0.0)) throw ConfigError("cost model: eta must be >= 0");
}

void DnnProfile::validate() const
{
    if (name.empty()) throw ConfigError("profile: empty name");
    if (!(model_size > 0.0)) throw ConfigError("profile '" + name + "': model_size must be > 0");
    if (!(gpu_memory_usage >= 0.0)) throw ConfigError("profile '" + name + "': negative memory usage");
    if (batch_size < 1) throw ConfigError("profile '" + name + "': batch_size must be >= 1");
    const auto d = compute_task_durations(*this);
    if (!(d.forward > 0.0) || !(d.backward > 0.0))
        throw ConfigError("profile '" + name + "': compute durations must be > 0");
}

void ClusterConfig::validate() const
{
    if (n_servers < 1) throw ConfigError("cluster: n_servers must be >= 1");
    if (gpus_per_server < 1) throw ConfigError("cluster: gpus_per_server must be >= 1");
    if (!(gpu_memory > 0.0)) throw ConfigError("cluster: gpu_memory must be > 0");
    cost_model.validate();
}

void JobSpec::validate() const
{
    const std::string tag = "job " + std::to_string(job_id) + ": ";
    if (n_gpus < 1) throw ConfigError(tag + "n_gpus must be >= 1");
    if (iterations < 1) throw ConfigError(tag + "iterations must be >= 1");
    if (!(arrival_time >= 0.0)) throw ConfigError(tag + "arrival_time must be >= 0");
    profile.validate();
}

ClusterState::ClusterState(const ClusterConfig& cfg) : config(cfg)
{
    config.validate();
    gpus.reserve(static_cast<size_t>(config.total_gpus()));
    for (int s = 0; s < config.n_servers; ++s) {
        for (int g = 0; g < config.gpus_per_server; ++g) {
            GpuState st;
            st.id = {s, g};
            st.memory_capacity = config.gpu_memory;
            gpus.push_back(st);
        }
    }
}

double ClusterState::server_workload(int server) const
{
    double total = 0.0;
    const int base = server * config.gpus_per_server;
    for (int g = 0; g < config.gpus_per_server; ++g) total += gpus[base + g].remaining_workload;
    return total;
}

double allreduce_cost(const CostModel& model, double message)
{
    return model.a + model.b * message;
}

double allreduce_cost_contended(const CostModel& model, double message, int k)
{
    if (k < 1) throw std::invalid_argument("allreduce_cost_contended: k must be >= 1");
    return model.a + k * model.b * message + (k - 1) * model.eta * message;
}

CostModel derive_allreduce_ab(const AllReduceParams& p, AllReduceAlgorithm algorithm)
{
    if (p.n_nodes < 2 || !std::has_single_bit(static_cast<unsigned>(p.n_nodes)))
        throw std::invalid_argument("derive_allreduce_ab: n_nodes must be a power of two >= 2");
    const double n = p.n_nodes;
    const double log_n = std::log2(n);
    CostModel m;
    m.eta = 0.0;
    switch (algorithm) {
    case AllReduceAlgorithm::BinaryTree:
        m.a = 2.0 * p.alpha * log_n;
        m.b = (2.0 * p.beta + p.gamma) * log_n;
        break;
    case AllReduceAlgorithm::RecursiveDoubling:
        m.a = p.alpha * log_n;
        m.b = (p.beta + p.gamma) * log_n;
        break;
    case AllReduceAlgorithm::RecursiveHalvingDoubling:
        m.a = 2.0 * p.alpha * log_n;
        m.b = 2.0 * p.beta - (2.0 * p.beta + p.gamma) / n + p.gamma;
        break;
    case AllReduceAlgorithm::Ring:
        m.a = 2.0 * (n - 1.0) * p.alpha;
        m.b = 2.0 * (n - 1.0) / n * p.beta + (n - 1.0) / n * p.gamma;
        break;
    }
    return m;
}

ComputeDurations compute_task_durations(const DnnProfile& profile)
{
    if (profile.t_forward && profile.t_backward) return {*profile.t_forward, *profile.t_backward};
    if (profile.lambda_f && profile.lambda_b && profile.peak_perf && *profile.peak_perf > 0.0) {
        const double batch = profile.batch_size;
        return {
            profile.t_forward.value_or(*profile.lambda_f * batch / *profile.peak_perf),
            profile.t_backward.value_or(*profile.lambda_b * batch / *profile.peak_perf),
        };
    }
    throw ConfigError("profile '" + profile.name +
                      "': needs measured t_f/t_b or lambda_f, lambda_b and peak_perf");
}

double job_compute_workload(const JobSpec& spec)
{
    const auto d = compute_task_durations(spec.profile);
    return (d.forward + d.backward) * spec.iterations;
}

double job_comm_workload(const JobSpec& spec, int server_set_size, const CostModel& model)
{
    if (server_set_size <= 1) return 0.0;
    return allreduce_cost(model, spec.profile.model_size) * spec.iterations;
}

std::vector<int> servers_of(const std::vector<GpuId>& gpus)
{
    std::vector<int> out;
    out.reserve(gpus.size());
    for (const auto& g : gpus) out.push_back(g.server);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace ccsched
