#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ccsched/model.hpp"
#include "ccsched/profiles.hpp"

namespace ccsched {

struct TraceConfig {
    int total_jobs = 160;
    int arrival_window = 1200;              // seconds; arrivals land on whole seconds in [1, window]
    std::map<int, int> gpu_count_histogram;  // GPUs per job -> number of jobs
    int iterations_min = 1000;
    int iterations_max = 6000;
    std::vector<std::pair<DnnProfile, double>> profile_mix;  // profile, weight
    uint64_t seed = 1;

    /// 160 jobs over 20 minutes: 80x1, 14x2, 26x4, 30x8, 8x16, 2x32 GPUs,
    /// 1000..6000 iterations, uniform over the built-in profiles.
    static TraceConfig defaults();

    /// Reads a config object. Absent keys keep their default values;
    /// profile_mix entries name profiles in `registry`.
    static TraceConfig from_json(const nlohmann::json& j, const ProfileRegistry& registry);
    static TraceConfig load(const std::filesystem::path& path, const ProfileRegistry& registry);
    nlohmann::json to_json() const;

    void validate() const;
};

/// Deterministic in cfg.seed. Jobs are numbered 0.. in arrival order.
std::vector<JobSpec> generate_trace(const TraceConfig& cfg);

enum class JobSize { Small, Large };
enum class JobLength { Short, Long };

struct JobClass {
    JobSize size;
    JobLength length;
    friend bool operator==(const JobClass&, const JobClass&) = default;
};

/// Large iff more than 4 GPUs; long iff more than 1600 iterations.
JobClass classify_job(const JobSpec& spec);

// Trace file: JSON array of {job_id, arrival_s, n_gpus, iterations, profile},
// where profile names an entry of the registry.
nlohmann::json trace_to_json(const std::vector<JobSpec>& specs);
std::vector<JobSpec> trace_from_json(const nlohmann::json& j, const ProfileRegistry& registry);
void save_trace(const std::vector<JobSpec>& specs, const std::filesystem::path& path);
std::vector<JobSpec> load_trace(const std::filesystem::path& path, const ProfileRegistry& registry);

/// FNV-1a over the canonical serialization; identifies a trace in reports.
std::string trace_fingerprint(const std::vector<JobSpec>& specs);

}  // namespace ccsched
