#include "ccsched/workload.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "ccsched/io.hpp"

namespace ccsched {

using nlohmann::json;

TraceConfig TraceConfig::defaults()
{
    TraceConfig cfg;
    cfg.gpu_count_histogram = {{1, 80}, {2, 14}, {4, 26}, {8, 30}, {16, 8}, {32, 2}};
    for (const auto& p : builtin_profiles()) cfg.profile_mix.emplace_back(p, 1.0);
    return cfg;
}

void TraceConfig::validate() const
{
    if (total_jobs < 0) throw ConfigError("trace config: total_jobs must be >= 0");
    if (arrival_window < 1) throw ConfigError("trace config: arrival_window must be >= 1");
    int sum = 0;
    for (const auto& [gpus, count] : gpu_count_histogram) {
        if (gpus < 1 || count < 0) throw ConfigError("trace config: bad histogram entry");
        sum += count;
    }
    if (sum != total_jobs)
        throw ConfigError("trace config: histogram sums to " + std::to_string(sum) + " but total_jobs is " +
                          std::to_string(total_jobs));
    if (iterations_min < 1 || iterations_max < iterations_min)
        throw ConfigError("trace config: need 1 <= iterations_min <= iterations_max");
    if (total_jobs > 0) {
        if (profile_mix.empty()) throw ConfigError("trace config: profile_mix is empty");
        double w = 0.0;
        for (const auto& [p, weight] : profile_mix) {
            if (!(weight >= 0.0)) throw ConfigError("trace config: negative profile weight");
            w += weight;
        }
        if (!(w > 0.0)) throw ConfigError("trace config: profile weights sum to zero");
    }
}

TraceConfig TraceConfig::from_json(const json& j, const ProfileRegistry& registry)
{
    if (!j.is_object()) throw ConfigError("trace config: expected a JSON object");
    TraceConfig cfg = defaults();
    try {
        if (j.contains("total_jobs")) cfg.total_jobs = j.at("total_jobs").get<int>();
        if (j.contains("arrival_window_s")) cfg.arrival_window = j.at("arrival_window_s").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
        if (j.contains("iteration_range")) {
            const auto& r = j.at("iteration_range");
            if (!r.is_array() || r.size() != 2) throw ConfigError("trace config: iteration_range must be [min, max]");
            cfg.iterations_min = r[0].get<int>();
            cfg.iterations_max = r[1].get<int>();
        }
        if (j.contains("gpu_count_histogram")) {
            cfg.gpu_count_histogram.clear();
            for (const auto& [key, value] : j.at("gpu_count_histogram").items())
                cfg.gpu_count_histogram[std::stoi(key)] = value.get<int>();
        }
        if (j.contains("profile_mix")) {
            cfg.profile_mix.clear();
            for (const auto& entry : j.at("profile_mix"))
                cfg.profile_mix.emplace_back(registry.get(entry.at("profile").get<std::string>()),
                                             entry.value("weight", 1.0));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("trace config: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ConfigError("trace config: histogram keys must be integers");
    }
    cfg.validate();
    return cfg;
}

TraceConfig TraceConfig::load(const std::filesystem::path& path, const ProfileRegistry& registry)
{
    return from_json(read_json_file(path), registry);
}

json TraceConfig::to_json() const
{
    json j;
    j["total_jobs"] = total_jobs;
    j["arrival_window_s"] = arrival_window;
    j["seed"] = seed;
    j["iteration_range"] = {iterations_min, iterations_max};
    json hist = json::object();
    for (const auto& [gpus, count] : gpu_count_histogram) hist[std::to_string(gpus)] = count;
    j["gpu_count_histogram"] = hist;
    json mix = json::array();
    for (const auto& [p, w] : profile_mix) mix.push_back({{"profile", p.name}, {"weight", w}});
    j["profile_mix"] = mix;
    return j;
}

std::vector<JobSpec> generate_trace(const TraceConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const int window = cfg.arrival_window;

    // Per-slot arrival counts: uniform draws, then nudged one arrival at a
    // time at uniformly chosen slots until they sum to total_jobs.
    const int upper = std::max(1, static_cast<int>(std::lround(2.0 * cfg.total_jobs / window)));
    std::uniform_int_distribution<int> slot_count(0, upper);
    std::vector<int> per_slot(static_cast<size_t>(window));
    long sum = 0;
    for (auto& n : per_slot) {
        n = slot_count(rng);
        sum += n;
    }
    std::uniform_int_distribution<int> any_slot(0, window - 1);
    while (sum != cfg.total_jobs) {
        auto& n = per_slot[static_cast<size_t>(any_slot(rng))];
        if (sum > cfg.total_jobs) {
            if (n > 0) {
                --n;
                --sum;
            }
        } else {
            ++n;
            ++sum;
        }
    }

    std::vector<int> gpu_counts;
    gpu_counts.reserve(static_cast<size_t>(cfg.total_jobs));
    for (const auto& [gpus, count] : cfg.gpu_count_histogram) gpu_counts.insert(gpu_counts.end(), count, gpus);
    std::shuffle(gpu_counts.begin(), gpu_counts.end(), rng);

    std::uniform_int_distribution<int> iters(cfg.iterations_min, cfg.iterations_max);
    std::vector<double> weights;
    for (const auto& [_, w] : cfg.profile_mix) weights.push_back(w);
    std::discrete_distribution<size_t> which_profile(weights.begin(), weights.end());

    std::vector<JobSpec> out;
    out.reserve(static_cast<size_t>(cfg.total_jobs));
    for (int slot = 0; slot < window; ++slot) {
        for (int i = 0; i < per_slot[static_cast<size_t>(slot)]; ++i) {
            JobSpec spec;
            spec.job_id = static_cast<int>(out.size());
            spec.arrival_time = slot + 1;
            spec.n_gpus = gpu_counts[out.size()];
            spec.iterations = iters(rng);
            spec.profile = cfg.profile_mix[which_profile(rng)].first;
            out.push_back(std::move(spec));
        }
    }
    return out;
}

JobClass classify_job(const JobSpec& spec)
{
    return {spec.n_gpus > 4 ? JobSize::Large : JobSize::Small,
            spec.iterations > 1600 ? JobLength::Long : JobLength::Short};
}

json trace_to_json(const std::vector<JobSpec>& specs)
{
    json arr = json::array();
    for (const auto& s : specs) {
        arr.push_back({{"job_id", s.job_id},
                       {"arrival_s", s.arrival_time},
                       {"n_gpus", s.n_gpus},
                       {"iterations", s.iterations},
                       {"profile", s.profile.name}});
    }
    return arr;
}

std::vector<JobSpec> trace_from_json(const json& j, const ProfileRegistry& registry)
{
    if (!j.is_array()) throw ParseError("trace: expected a JSON array of jobs");
    std::vector<JobSpec> out;
    out.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const std::string ctx = "trace entry " + std::to_string(i);
        if (!e.is_object()) throw ParseError(ctx + ": expected an object");
        auto field = [&](const char* key) -> const json& {
            if (!e.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
            return e.at(key);
        };
        JobSpec s;
        try {
            s.job_id = field("job_id").get<int>();
            s.arrival_time = field("arrival_s").get<double>();
            s.n_gpus = field("n_gpus").get<int>();
            s.iterations = field("iterations").get<int>();
            const auto& prof = field("profile");
            s.profile = prof.is_object() ? profile_from_json(prof) : registry.get(prof.get<std::string>());
        } catch (const json::exception& ex) {
            throw ParseError(ctx + ": " + ex.what());
        } catch (const ParseError&) {
            throw;
        } catch (const ConfigError& ex) {
            throw ParseError(ctx + ": " + ex.what());
        }
        try {
            s.validate();
        } catch (const ConfigError& ex) {
            throw ParseError(ctx + ": " + ex.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

void save_trace(const std::vector<JobSpec>& specs, const std::filesystem::path& path)
{
    write_text_atomic(path, trace_to_json(specs).dump(2) + "\n");
}

std::vector<JobSpec> load_trace(const std::filesystem::path& path, const ProfileRegistry& registry)
{
    const auto j = read_json_file(path);
    try {
        return trace_from_json(j, registry);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string trace_fingerprint(const std::vector<JobSpec>& specs)
{
    const std::string text = trace_to_json(specs).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ccsched
