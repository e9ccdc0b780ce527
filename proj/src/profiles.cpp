#include "ccsched/profiles.hpp"

#include <fstream>

namespace ccsched {

using nlohmann::json;

namespace {

DnnProfile measured(const char* name, double size_mb, double mem_mb, int batch, double tf_ms, double tb_ms)
{
    DnnProfile p;
    p.name = name;
    p.model_size = size_mb * kBytesPerMb;
    p.gpu_memory_usage = mem_mb * kBytesPerMb;
    p.batch_size = batch;
    p.t_forward = tf_ms / 1000.0;
    p.t_backward = tb_ms / 1000.0;
    return p;
}

template <typename T>
T required(const json& j, const char* key, const std::string& ctx)
{
    if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(ctx + ": field '" + key + "': " + e.what());
    }
}

std::optional<double> optional_number(const json& j, const char* key, const std::string& ctx)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return required<double>(j, key, ctx);
}

}  // namespace

std::vector<DnnProfile> builtin_profiles()
{
    return {
        measured("VGG-16", 526.4, 4527, 16, 35.8, 53.7),
        measured("ResNet-50", 99.2, 3213, 16, 25.0, 37.4),
        measured("Inception-V3", 103.0, 3291, 16, 34.9, 52.4),
        measured("LSTM-PTB", 251.8, 2751, 64, 31.5, 47.3),
    };
}

json profile_to_json(const DnnProfile& p)
{
    json j;
    j["name"] = p.name;
    j["model_size_mb"] = p.model_size / kBytesPerMb;
    j["gpu_memory_mb"] = p.gpu_memory_usage / kBytesPerMb;
    j["batch_size"] = p.batch_size;
    if (p.t_forward) j["t_f_ms"] = *p.t_forward * 1000.0;
    if (p.t_backward) j["t_b_ms"] = *p.t_backward * 1000.0;
    if (p.lambda_f) j["lambda_f"] = *p.lambda_f;
    if (p.lambda_b) j["lambda_b"] = *p.lambda_b;
    if (p.peak_perf) j["peak_gflops"] = *p.peak_perf;
    return j;
}

DnnProfile profile_from_json(const json& j)
{
    if (!j.is_object()) throw ParseError("profile entry: expected an object");
    std::string ctx = "profile";
    if (j.contains("name") && j["name"].is_string()) ctx += " '" + j["name"].get<std::string>() + "'";

    DnnProfile p;
    p.name = required<std::string>(j, "name", ctx);
    p.model_size = required<double>(j, "model_size_mb", ctx) * kBytesPerMb;
    p.gpu_memory_usage = required<double>(j, "gpu_memory_mb", ctx) * kBytesPerMb;
    p.batch_size = required<int>(j, "batch_size", ctx);
    if (auto v = optional_number(j, "t_f_ms", ctx)) p.t_forward = *v / 1000.0;
    if (auto v = optional_number(j, "t_b_ms", ctx)) p.t_backward = *v / 1000.0;
    p.lambda_f = optional_number(j, "lambda_f", ctx);
    p.lambda_b = optional_number(j, "lambda_b", ctx);
    p.peak_perf = optional_number(j, "peak_gflops", ctx);
    try {
        p.validate();
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    return p;
}

ProfileRegistry::ProfileRegistry(const std::vector<DnnProfile>& profiles)
{
    for (const auto& p : profiles) add(p);
}

void ProfileRegistry::add(const DnnProfile& p)
{
    p.validate();
    by_name_[p.name] = p;
}

const DnnProfile& ProfileRegistry::get(const std::string& name) const
{
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw ConfigError("unknown DNN profile '" + name + "'");
    return it->second;
}

std::vector<DnnProfile> ProfileRegistry::all() const
{
    std::vector<DnnProfile> out;
    out.reserve(by_name_.size());
    for (const auto& [_, p] : by_name_) out.push_back(p);
    return out;
}

json ProfileRegistry::to_json() const
{
    json arr = json::array();
    for (const auto& [_, p] : by_name_) arr.push_back(profile_to_json(p));
    return arr;
}

ProfileRegistry ProfileRegistry::from_json(const json& j)
{
    if (!j.is_array()) throw ParseError("profile registry: expected a JSON array");
    ProfileRegistry reg;
    for (size_t i = 0; i < j.size(); ++i) {
        try {
            reg.add(profile_from_json(j[i]));
        } catch (const ParseError& e) {
            throw ParseError("entry " + std::to_string(i) + ": " + e.what());
        }
    }
    return reg;
}

ProfileRegistry ProfileRegistry::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    try {
        return from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace ccsched
