#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccsched/model.hpp"

namespace ccsched {

struct JobRecord {
    int job_id = 0;
    std::string profile;
    int n_gpus = 0;
    int iterations = 0;
    double arrival = 0.0;
    double placed = 0.0;
    double finish = 0.0;
    double jct = 0.0;
    double compute_lower_bound = 0.0;  // iterations * (t_f + t_b)
    std::vector<GpuId> gpus;
};

struct GpuRecord {
    GpuId id;
    double busy_seconds = 0.0;
    double utilization = 0.0;
};

struct Aggregates {
    size_t n_jobs = 0;
    double avg_jct = 0.0;
    double median_jct = 0.0;  // lower median
    double p95_jct = 0.0;     // nearest rank
    double avg_gpu_utilization = 0.0;
    double horizon_start = 0.0;  // first arrival
    double horizon_end = 0.0;    // last completion
};

struct EventCounts {
    long arrivals = 0;
    long compute_task_done = 0;
    long comm_task_done = 0;
    long scheduling_passes = 0;
    int max_server_comm_concurrency = 0;
    std::map<std::string, long> admission_decisions;  // reason -> count
};

enum class TaskKind { Forward, Backward, AllReduce };

/// One executed task; only collected when the run asks for a timeline.
struct TaskRecord {
    int job_id = 0;
    int iteration = 0;
    TaskKind kind = TaskKind::Forward;
    int gpu_flat = -1;  // -1 for All-Reduce
    double start = 0.0;
    double end = 0.0;
};

struct SimReport {
    std::string placement;
    std::string scheduler;
    uint64_t seed = 0;
    std::string trace_fingerprint;
    std::vector<JobRecord> jobs;  // by job_id
    std::vector<GpuRecord> gpus;  // flat, server-major
    Aggregates aggregates;
    EventCounts counts;
    std::vector<TaskRecord> timeline;  // not serialized

    std::string label() const { return placement + "+" + scheduler; }
};

/// Average, lower-median and nearest-rank 95th percentile JCT, and GPU
/// utilization as busy time over [first arrival, last completion],
/// averaged over all GPUs.
Aggregates compute_metrics(std::span<const JobRecord> jobs, std::span<const double> gpu_busy_seconds);

nlohmann::json report_to_json(const SimReport& report);
SimReport report_from_json(const nlohmann::json& j);
SimReport load_report(const std::filesystem::path& path);

/// job_id,arrival_s,finish_s,jct_s
std::string jobs_csv(const SimReport& report);
/// cdf_x_s,cdf_p over the sorted JCTs
std::string jct_cdf_csv(const SimReport& report);

struct ReportPaths {
    std::filesystem::path report_json;
    std::filesystem::path jobs_csv;
    std::filesystem::path cdf_csv;
};

/// Writes report.json, jobs.csv and jct_cdf.csv under `dir`.
ReportPaths write_report_files(const SimReport& report, const std::filesystem::path& dir);

/// One row per report with the columns
/// Method, Average GPU Util., Average JCT(s), Median JCT(s), 95th JCT(s).
std::string comparison_csv(std::span<const SimReport> reports);
std::string comparison_table(std::span<const SimReport> reports);

}  // namespace ccsched
