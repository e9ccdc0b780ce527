#include "ccsched/sweep.hpp"

#include <exception>

namespace ccsched {

namespace {

void check(std::span<const SweepCase> cases)
{
    for (const auto& c : cases)
        if (c.trace == nullptr) throw ConfigError("sweep: case without a trace");
}

}  // namespace

std::vector<SimReport> run_sweep_serial(const ClusterConfig& cluster, std::span<const SweepCase> cases)
{
    check(cases);
    std::vector<SimReport> out;
    out.reserve(cases.size());
    for (const auto& c : cases) out.push_back(run_sim(cluster, *c.trace, c.options));
    return out;
}

std::vector<SimReport> run_sweep(const ClusterConfig& cluster, std::span<const SweepCase> cases)
{
    check(cases);
    const auto n = static_cast<long>(cases.size());
    std::vector<SimReport> out(cases.size());
    std::vector<std::exception_ptr> errors(cases.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
        try {
            out[i] = run_sim(cluster, *cases[i].trace, cases[i].options);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace ccsched
