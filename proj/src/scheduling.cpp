#include "ccsched/scheduling.hpp"

#include <algorithm>
#include <charconv>

namespace ccsched {

const char* to_string(AdmissionReason r)
{
    switch (r) {
    case AdmissionReason::NoContention: return "no-contention";
    case AdmissionReason::ThresholdAccept: return "threshold-accept";
    case AdmissionReason::ThresholdReject: return "threshold-reject";
    case AdmissionReason::CapReject: return "cap-reject";
    case AdmissionReason::BlindAccept: return "blind-accept";
    }
    return "?";
}

const char* to_string(DualCase c)
{
    switch (c) {
    case DualCase::C1: return "C1";
    case DualCase::C2a: return "C2a";
    case DualCase::C2b: return "C2b";
    }
    return "?";
}

void DualTaskInstance::validate() const
{
    if (!(m1 > 0.0) || !(m1 <= m2)) throw ConfigError("DualTaskInstance: need 0 < m1 <= m2");
    if (!(b > 0.0) || !(eta >= 0.0)) throw ConfigError("DualTaskInstance: need b > 0, eta >= 0");
}

double t_aver_c1_at(const DualTaskInstance& in, double t)
{
    return (-(1.0 + 2.0 * in.eta / in.b) * t + (3.0 * in.b + 2.0 * in.eta) * in.m1 + in.b * in.m2) / 2.0;
}

double t_aver_c2_at(const DualTaskInstance& in, double t)
{
    if (t <= in.b * (in.m2 - in.m1))
        return (t + (3.0 * in.b + 2.0 * in.eta) * in.m1 + in.b * in.m2) / 2.0;
    return (-(1.0 + 2.0 * in.eta / in.b) * t + (3.0 * in.b + 2.0 * in.eta) * in.m2 + in.b * in.m1) / 2.0;
}

double t_aver_c1(const DualTaskInstance& in)
{
    return (2.0 * in.b * in.m1 + in.b * in.m2) / 2.0;
}

C2Minima t_aver_c2(const DualTaskInstance& in)
{
    return {
        ((3.0 * in.b + 2.0 * in.eta) * in.m1 + in.b * in.m2) / 2.0,
        (in.b * in.m1 + 2.0 * in.b * in.m2) / 2.0,
    };
}

DualOptimum analytic_dual_optimum(const DualTaskInstance& in)
{
    DualOptimum best{DualCase::C1, t_aver_c1(in)};
    const auto c2 = t_aver_c2(in);
    if (c2.c2a < best.t_aver) best = {DualCase::C2a, c2.c2a};
    if (c2.c2b < best.t_aver) best = {DualCase::C2b, c2.c2b};
    return best;
}

double contention_threshold(const CostModel& model)
{
    return model.b / (2.0 * (model.b + model.eta));
}

AdmissionDecision ada_dual(const LinkState& link, const CommTask& new_task, const CostModel& model)
{
    int max_tasks = 0;
    for (int s : new_task.server_set) max_tasks = std::max(max_tasks, link.active_count(s));

    if (max_tasks == 0) return {true, AdmissionReason::NoContention};
    if (max_tasks > 1) return {false, AdmissionReason::CapReject};

    double m_old = 0.0;
    for (int s : new_task.server_set) {
        for (int id : link.active_on(s)) {
            if (const auto* a = link.find(id)) m_old = std::max(m_old, a->task.bytes_remaining);
        }
    }
    if (m_old > 0.0 && new_task.bytes_remaining / m_old < contention_threshold(model))
        return {true, AdmissionReason::ThresholdAccept};
    return {false, AdmissionReason::ThresholdReject};
}

AdmissionDecision srsf_n_admit(int n, const LinkState& link, const CommTask& new_task)
{
    int max_tasks = 0;
    for (int s : new_task.server_set) max_tasks = std::max(max_tasks, link.active_count(s));
    if (max_tasks >= n) return {false, AdmissionReason::CapReject};
    return {true, max_tasks == 0 ? AdmissionReason::NoContention : AdmissionReason::BlindAccept};
}

SchedulerPolicy ada_srsf_policy()
{
    return {CommPolicyKind::AdaDual, 2};
}

SchedulerPolicy srsf_n_policy(int n)
{
    if (n < 1) throw ConfigError("srsf:<n> needs n >= 1");
    return {CommPolicyKind::MaxConcurrent, n};
}

SchedulerPolicy SchedulerPolicy::parse(const std::string& text)
{
    if (text == "ada-srsf") return ada_srsf_policy();
    if (text.rfind("srsf:", 0) == 0) {
        const std::string num = text.substr(5);
        int n = 0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), n);
        if (ec != std::errc{} || ptr != num.data() + num.size() || n < 1)
            throw ConfigError("scheduler '" + text + "': n must be an integer >= 1");
        return srsf_n_policy(n);
    }
    throw ConfigError("unknown scheduler '" + text + "' (expected ada-srsf|srsf:<n>)");
}

std::string SchedulerPolicy::to_string() const
{
    if (kind == CommPolicyKind::AdaDual) return "ada-srsf";
    return "srsf:" + std::to_string(max_concurrent);
}

AdmissionDecision SchedulerPolicy::decide(const LinkState& link, const CommTask& task, const CostModel& model) const
{
    if (kind == CommPolicyKind::AdaDual) return ada_dual(link, task, model);
    return srsf_n_admit(max_concurrent, link, task);
}

}  // namespace ccsched
