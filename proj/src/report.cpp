#include "ccsched/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "ccsched/io.hpp"

namespace ccsched {

using nlohmann::json;

namespace {

std::string fmt(const char* spec, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

Aggregates compute_metrics(std::span<const JobRecord> jobs, std::span<const double> gpu_busy_seconds)
{
    Aggregates agg;
    agg.n_jobs = jobs.size();
    if (jobs.empty()) return agg;

    std::vector<double> jcts;
    jcts.reserve(jobs.size());
    agg.horizon_start = jobs.front().arrival;
    agg.horizon_end = jobs.front().finish;
    for (const auto& r : jobs) {
        jcts.push_back(r.jct);
        agg.horizon_start = std::min(agg.horizon_start, r.arrival);
        agg.horizon_end = std::max(agg.horizon_end, r.finish);
    }
    std::sort(jcts.begin(), jcts.end());
    const size_t n = jcts.size();
    agg.avg_jct = std::accumulate(jcts.begin(), jcts.end(), 0.0) / static_cast<double>(n);
    agg.median_jct = jcts[(n - 1) / 2];
    const auto rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(n)));
    agg.p95_jct = jcts[std::max<size_t>(rank, 1) - 1];

    const double horizon = agg.horizon_end - agg.horizon_start;
    if (horizon > 0.0 && !gpu_busy_seconds.empty()) {
        double total = 0.0;
        for (double busy : gpu_busy_seconds) total += std::clamp(busy / horizon, 0.0, 1.0);
        agg.avg_gpu_utilization = total / static_cast<double>(gpu_busy_seconds.size());
    }
    return agg;
}

json report_to_json(const SimReport& r)
{
    json j;
    j["placement"] = r.placement;
    j["scheduler"] = r.scheduler;
    j["seed"] = r.seed;
    j["trace_fingerprint"] = r.trace_fingerprint;

    const auto& a = r.aggregates;
    j["aggregates"] = {
        {"n_jobs", a.n_jobs},
        {"avg_jct_s", a.avg_jct},
        {"median_jct_s", a.median_jct},
        {"p95_jct_s", a.p95_jct},
        {"avg_gpu_utilization", a.avg_gpu_utilization},
        {"horizon_start_s", a.horizon_start},
        {"horizon_end_s", a.horizon_end},
    };

    const auto& c = r.counts;
    j["events"] = {
        {"arrivals", c.arrivals},
        {"compute_task_done", c.compute_task_done},
        {"comm_task_done", c.comm_task_done},
        {"scheduling_passes", c.scheduling_passes},
        {"max_server_comm_concurrency", c.max_server_comm_concurrency},
        {"admission_decisions", c.admission_decisions},
    };

    json jobs = json::array();
    for (const auto& jr : r.jobs) {
        json gpus = json::array();
        for (const auto& g : jr.gpus) gpus.push_back({g.server, g.gpu});
        jobs.push_back({
            {"job_id", jr.job_id},
            {"profile", jr.profile},
            {"n_gpus", jr.n_gpus},
            {"iterations", jr.iterations},
            {"arrival_s", jr.arrival},
            {"placed_s", jr.placed},
            {"finish_s", jr.finish},
            {"jct_s", jr.jct},
            {"compute_lower_bound_s", jr.compute_lower_bound},
            {"gpus", gpus},
        });
    }
    j["jobs"] = jobs;

    json gpus = json::array();
    for (const auto& g : r.gpus) {
        gpus.push_back({
            {"server", g.id.server},
            {"gpu", g.id.gpu},
            {"busy_s", g.busy_seconds},
            {"utilization", g.utilization},
        });
    }
    j["gpus"] = gpus;
    return j;
}

SimReport report_from_json(const json& j)
{
    SimReport r;
    try {
        r.placement = j.at("placement").get<std::string>();
        r.scheduler = j.at("scheduler").get<std::string>();
        r.seed = j.at("seed").get<uint64_t>();
        r.trace_fingerprint = j.value("trace_fingerprint", "");
        const auto& a = j.at("aggregates");
        r.aggregates.n_jobs = a.at("n_jobs").get<size_t>();
        r.aggregates.avg_jct = a.at("avg_jct_s").get<double>();
        r.aggregates.median_jct = a.at("median_jct_s").get<double>();
        r.aggregates.p95_jct = a.at("p95_jct_s").get<double>();
        r.aggregates.avg_gpu_utilization = a.at("avg_gpu_utilization").get<double>();
        r.aggregates.horizon_start = a.value("horizon_start_s", 0.0);
        r.aggregates.horizon_end = a.value("horizon_end_s", 0.0);
        if (j.contains("events")) {
            const auto& e = j.at("events");
            r.counts.arrivals = e.value("arrivals", 0L);
            r.counts.compute_task_done = e.value("compute_task_done", 0L);
            r.counts.comm_task_done = e.value("comm_task_done", 0L);
            r.counts.scheduling_passes = e.value("scheduling_passes", 0L);
            r.counts.max_server_comm_concurrency = e.value("max_server_comm_concurrency", 0);
            if (e.contains("admission_decisions"))
                r.counts.admission_decisions = e.at("admission_decisions").get<std::map<std::string, long>>();
        }
        for (const auto& jj : j.value("jobs", json::array())) {
            JobRecord jr;
            jr.job_id = jj.at("job_id").get<int>();
            jr.profile = jj.value("profile", "");
            jr.n_gpus = jj.value("n_gpus", 0);
            jr.iterations = jj.value("iterations", 0);
            jr.arrival = jj.at("arrival_s").get<double>();
            jr.placed = jj.value("placed_s", jr.arrival);
            jr.finish = jj.at("finish_s").get<double>();
            jr.jct = jj.at("jct_s").get<double>();
            jr.compute_lower_bound = jj.value("compute_lower_bound_s", 0.0);
            for (const auto& g : jj.value("gpus", json::array())) jr.gpus.push_back({g.at(0).get<int>(), g.at(1).get<int>()});
            r.jobs.push_back(std::move(jr));
        }
        for (const auto& g : j.value("gpus", json::array())) {
            GpuRecord gr;
            gr.id = {g.at("server").get<int>(), g.at("gpu").get<int>()};
            gr.busy_seconds = g.at("busy_s").get<double>();
            gr.utilization = g.at("utilization").get<double>();
            r.gpus.push_back(gr);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
    return r;
}

SimReport load_report(const std::filesystem::path& path)
{
    const auto j = read_json_file(path);
    try {
        return report_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string jobs_csv(const SimReport& r)
{
    std::string out = "job_id,arrival_s,finish_s,jct_s\n";
    for (const auto& j : r.jobs) {
        out += std::to_string(j.job_id) + "," + fmt("%.9g", j.arrival) + "," + fmt("%.9g", j.finish) + "," +
               fmt("%.9g", j.jct) + "\n";
    }
    return out;
}

std::string jct_cdf_csv(const SimReport& r)
{
    std::vector<double> jcts;
    jcts.reserve(r.jobs.size());
    for (const auto& j : r.jobs) jcts.push_back(j.jct);
    std::sort(jcts.begin(), jcts.end());
    std::string out = "cdf_x_s,cdf_p\n";
    for (size_t i = 0; i < jcts.size(); ++i) {
        out += fmt("%.9g", jcts[i]) + "," +
               fmt("%.6g", static_cast<double>(i + 1) / static_cast<double>(jcts.size())) + "\n";
    }
    return out;
}

ReportPaths write_report_files(const SimReport& report, const std::filesystem::path& dir)
{
    ReportPaths p{dir / "report.json", dir / "jobs.csv", dir / "jct_cdf.csv"};
    write_text_atomic(p.report_json, report_to_json(report).dump(2) + "\n");
    write_text_atomic(p.jobs_csv, jobs_csv(report));
    write_text_atomic(p.cdf_csv, jct_cdf_csv(report));
    return p;
}

std::string comparison_csv(std::span<const SimReport> reports)
{
    std::string out = "Method,Average GPU Util.,Average JCT(s),Median JCT(s),95th JCT(s)\n";
    for (const auto& r : reports) {
        const auto& a = r.aggregates;
        out += r.label() + "," + fmt("%.2f%%", 100.0 * a.avg_gpu_utilization) + "," + fmt("%.2f", a.avg_jct) + "," +
               fmt("%.2f", a.median_jct) + "," + fmt("%.2f", a.p95_jct) + "\n";
    }
    return out;
}

std::string comparison_table(std::span<const SimReport> reports)
{
    const char* headers[] = {"Method", "Average GPU Util.", "Average JCT(s)", "Median JCT(s)", "95th JCT(s)"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) {
        const auto& a = r.aggregates;
        rows.push_back({r.label(), fmt("%.2f%%", 100.0 * a.avg_gpu_utilization), fmt("%.2f", a.avg_jct),
                        fmt("%.2f", a.median_jct), fmt("%.2f", a.p95_jct)});
    }
    size_t width[5];
    for (int c = 0; c < 5; ++c) {
        width[c] = std::string(headers[c]).size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    auto line = [&](auto cell) {
        for (int c = 0; c < 5; ++c) {
            const std::string s = cell(c);
            os << (c == 0 ? "| " : " | ") << s << std::string(width[c] - s.size(), ' ');
        }
        os << " |\n";
    };
    line([&](int c) { return std::string(headers[c]); });
    line([&](int c) { return std::string(width[c], '-'); });
    for (const auto& row : rows) line([&](int c) { return row[c]; });
    return os.str();
}

}  // namespace ccsched
