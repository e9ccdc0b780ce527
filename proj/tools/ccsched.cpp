#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ccsched/engine.hpp"
#include "ccsched/io.hpp"
#include "ccsched/profiles.hpp"
#include "ccsched/report.hpp"
#include "ccsched/sweep.hpp"
#include "ccsched/workload.hpp"

namespace fs = std::filesystem;
using namespace ccsched;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitSimulation = 3;

ProfileRegistry registry_from(const std::string& path)
{
    return path.empty() ? ProfileRegistry::builtin() : ProfileRegistry::load(path);
}

// Cluster file keys: n_servers, gpus_per_server, gpu_memory_gb, a, b, eta.
ClusterConfig load_cluster(const std::string& path)
{
    ClusterConfig c;
    if (path.empty()) return c;
    const auto j = read_json_file(path);
    try {
        c.n_servers = j.value("n_servers", c.n_servers);
        c.gpus_per_server = j.value("gpus_per_server", c.gpus_per_server);
        c.gpu_memory = j.value("gpu_memory_gb", c.gpu_memory / 1e9) * 1e9;
        c.cost_model.a = j.value("a", c.cost_model.a);
        c.cost_model.b = j.value("b", c.cost_model.b);
        c.cost_model.eta = j.value("eta", c.cost_model.eta);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    c.validate();
    return c;
}

void print_histogram(const std::vector<JobSpec>& trace)
{
    std::map<int, int> by_gpus;
    std::map<std::string, int> by_profile;
    for (const auto& j : trace) {
        ++by_gpus[j.n_gpus];
        ++by_profile[j.profile.name];
    }
    std::printf("%zu jobs\n", trace.size());
    for (const auto& [n, count] : by_gpus) std::printf("  %2d GPU(s): %d\n", n, count);
    for (const auto& [name, count] : by_profile) std::printf("  %s: %d\n", name.c_str(), count);
}

int cmd_generate(const std::string& config, const std::string& out, std::optional<uint64_t> seed,
                 const std::string& profiles)
{
    const auto registry = registry_from(profiles);
    auto cfg = TraceConfig::load(config, registry);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    const auto trace = generate_trace(cfg);
    save_trace(trace, out);
    print_histogram(trace);
    std::printf("wrote %s (fingerprint %s)\n", out.c_str(), trace_fingerprint(trace).c_str());
    return 0;
}

int cmd_run(const std::string& trace_path, const std::string& cluster_path, const std::string& placement,
            const std::string& scheduler, uint64_t seed, const std::string& out, const std::string& profiles)
{
    const auto registry = registry_from(profiles);
    const auto cluster = load_cluster(cluster_path);
    const auto trace = load_trace(trace_path, registry);
    SimOptions opt;
    opt.placement = PlacementPolicy::parse(placement);
    opt.scheduler = SchedulerPolicy::parse(scheduler);
    opt.seed = seed;
    SimReport report;
    try {
        report = run_sim(cluster, trace, opt);
    } catch (const DeadlockError& e) {
        std::fprintf(stderr, "simulation failed: %s\n", e.what());
        return kExitSimulation;
    }
    const auto paths = write_report_files(report, out);
    std::cout << comparison_table(std::span(&report, 1));
    std::printf("wrote %s\n", paths.report_json.c_str());
    return 0;
}

int cmd_sweep(const std::string& trace_path, const std::string& cluster_path,
              const std::vector<std::string>& placements, const std::vector<std::string>& schedulers,
              const std::vector<uint64_t>& seeds, const std::string& out, const std::string& profiles)
{
    const auto registry = registry_from(profiles);
    const auto cluster = load_cluster(cluster_path);
    const auto trace = load_trace(trace_path, registry);
    std::vector<SweepCase> cases;
    for (const auto& p : placements)
        for (const auto& s : schedulers)
            for (auto seed : seeds) {
                SimOptions opt;
                opt.placement = PlacementPolicy::parse(p);
                opt.scheduler = SchedulerPolicy::parse(s);
                opt.seed = seed;
                cases.push_back({&trace, opt});
            }
    std::vector<SimReport> reports;
    try {
        reports = run_sweep(cluster, cases);
    } catch (const DeadlockError& e) {
        std::fprintf(stderr, "simulation failed: %s\n", e.what());
        return kExitSimulation;
    }
    for (const auto& r : reports) {
        std::string name = r.placement + "_" + r.scheduler + "_seed" + std::to_string(r.seed);
        for (auto& ch : name)
            if (ch == ':') ch = '-';
        write_report_files(r, fs::path(out) / name);
    }
    write_text_atomic(fs::path(out) / "comparison.csv", comparison_csv(reports));
    std::cout << comparison_table(reports);
    return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& csv_out)
{
    if (paths.empty()) throw ConfigError("compare: no reports given");
    std::vector<SimReport> reports;
    for (const auto& p : paths) reports.push_back(load_report(p));
    for (const auto& r : reports) {
        if (r.trace_fingerprint != reports.front().trace_fingerprint) {
            std::fprintf(stderr, "warning: reports were produced from different traces\n");
            break;
        }
    }
    std::cout << comparison_table(reports);
    if (!csv_out.empty()) write_text_atomic(csv_out, comparison_csv(reports));
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Simulator for communication-contention-aware scheduling of distributed training jobs"};
    app.require_subcommand(1);
    std::string profiles;
    app.add_option("--profiles", profiles, "DNN profile registry (JSON); built-in profiles if omitted");

    auto* gen = app.add_subcommand("generate", "Generate a job trace");
    std::string gen_config, gen_out;
    std::optional<uint64_t> gen_seed;
    gen->add_option("config", gen_config, "Trace config (JSON)")->required();
    gen->add_option("out", gen_out, "Output trace path")->required();
    gen->add_option("--seed", gen_seed, "Overrides the config seed");

    auto* run = app.add_subcommand("run", "Simulate one trace under one policy pair");
    std::string run_trace, run_cluster, run_placement = "lwf:1", run_scheduler = "ada-srsf", run_out = "out";
    uint64_t run_seed = 0;
    run->add_option("trace", run_trace, "Trace file")->required();
    run->add_option("--cluster", run_cluster, "Cluster config (JSON); 16x4 defaults if omitted");
    run->add_option("--placement", run_placement, "lwf:<kappa> | ff | ls | rand")->capture_default_str();
    run->add_option("--scheduler", run_scheduler, "ada-srsf | srsf:<n>")->capture_default_str();
    run->add_option("--seed", run_seed, "Seed for randomized placement")->capture_default_str();
    run->add_option("--out", run_out, "Output directory")->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "Run placement x scheduler x seed in parallel");
    std::string sw_trace, sw_cluster, sw_out = "sweep";
    std::vector<std::string> sw_placements{"lwf:1", "rand", "ff", "ls"};
    std::vector<std::string> sw_schedulers{"ada-srsf", "srsf:1", "srsf:2"};
    std::vector<uint64_t> sw_seeds{0};
    sweep->add_option("trace", sw_trace, "Trace file")->required();
    sweep->add_option("--cluster", sw_cluster, "Cluster config (JSON)");
    sweep->add_option("--placement", sw_placements, "Placement policies")->capture_default_str();
    sweep->add_option("--scheduler", sw_schedulers, "Scheduler policies")->capture_default_str();
    sweep->add_option("--seed", sw_seeds, "Seeds")->capture_default_str();
    sweep->add_option("--out", sw_out, "Output directory")->capture_default_str();

    auto* cmp = app.add_subcommand("compare", "Tabulate reports");
    std::vector<std::string> cmp_paths;
    std::string cmp_csv;
    cmp->add_option("reports", cmp_paths, "report.json files");
    cmp->add_option("--csv", cmp_csv, "Also write the table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return cmd_generate(gen_config, gen_out, gen_seed, profiles);
        if (*run) return cmd_run(run_trace, run_cluster, run_placement, run_scheduler, run_seed, run_out, profiles);
        if (*sweep) return cmd_sweep(sw_trace, sw_cluster, sw_placements, sw_schedulers, sw_seeds, sw_out, profiles);
        if (*cmp) return cmd_compare(cmp_paths, cmp_csv);
    } catch (const DeadlockError& e) {
        std::fprintf(stderr, "simulation failed: %s\n", e.what());
        return kExitSimulation;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
