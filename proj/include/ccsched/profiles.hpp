#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccsched/model.hpp"

namespace ccsched {

// The four measured V100 profiles (VGG-16, ResNet-50, Inception-V3, LSTM-PTB).
std::vector<DnnProfile> builtin_profiles();

/// Name-indexed set of DNN profiles. Iteration order is by name.
class ProfileRegistry {
public:
    ProfileRegistry() = default;
    explicit ProfileRegistry(const std::vector<DnnProfile>& profiles);

    static ProfileRegistry builtin() { return ProfileRegistry(builtin_profiles()); }
    static ProfileRegistry load(const std::filesystem::path& path);
    static ProfileRegistry from_json(const nlohmann::json& j);

    nlohmann::json to_json() const;
    void add(const DnnProfile& p);
    const DnnProfile& get(const std::string& name) const;
    bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
    std::vector<DnnProfile> all() const;
    size_t size() const { return by_name_.size(); }

private:
    std::map<std::string, DnnProfile> by_name_;
};

// Registry entry schema: name, model_size_mb, gpu_memory_mb, batch_size,
// t_f_ms, t_b_ms; lambda_f, lambda_b, peak_gflops are optional.
nlohmann::json profile_to_json(const DnnProfile& p);
DnnProfile profile_from_json(const nlohmann::json& j);

}  // namespace ccsched
