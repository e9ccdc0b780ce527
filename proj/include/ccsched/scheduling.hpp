#pragma once

#include <string>

#include "ccsched/contention.hpp"
#include "ccsched/model.hpp"

namespace ccsched {

enum class AdmissionReason {
    NoContention,     // no incumbent on any of the task's servers
    ThresholdAccept,  // one incumbent, small enough relative to it
    ThresholdReject,  // one incumbent, too large relative to it
    CapReject,        // the per-server concurrency limit is reached
    BlindAccept,      // SRSF(n): below the limit, admitted without a test
};

struct AdmissionDecision {
    bool start_now = false;
    AdmissionReason reason = AdmissionReason::NoContention;
};

const char* to_string(AdmissionReason r);

/// Two communication tasks released together: m1 <= m2 bytes, contention
/// parameters b and eta (latency ignored).
struct DualTaskInstance {
    double m1 = 0.0;
    double m2 = 0.0;
    double b = 0.0;
    double eta = 0.0;

    void validate() const;
};

enum class DualCase {
    C1,   // small task first, large task started at t in [0, b*m1]
    C2a,  // large task first, small one started while the whole small message overlaps
    C2b,  // large task first, small one started late enough that it outlives the large one
};

const char* to_string(DualCase c);

// Average completion time of the pair as a function of the second start
// offset t, under the shared-rate model.
double t_aver_c1_at(const DualTaskInstance& inst, double t);  // t in [0, b*m1]
double t_aver_c2_at(const DualTaskInstance& inst, double t);  // t in [0, b*m2]

/// Minimum over C1, reached at t = b*m1: (2*b*m1 + b*m2) / 2.
double t_aver_c1(const DualTaskInstance& inst);

struct C2Minima {
    double c2a = 0.0;  // t = 0: ((3b + 2 eta) m1 + b m2) / 2
    double c2b = 0.0;  // t = b*m2: (b m1 + 2 b m2) / 2
};
C2Minima t_aver_c2(const DualTaskInstance& inst);

struct DualOptimum {
    DualCase best = DualCase::C1;
    double t_aver = 0.0;
};

/// Smallest of the three closed-form candidates (ties favour C1, then C2a).
DualOptimum analytic_dual_optimum(const DualTaskInstance& inst);

/// b / (2 (b + eta)): a newcomer should join a lone incumbent only when
/// its size over the incumbent's remaining size is below this ratio.
double contention_threshold(const CostModel& model);

/// AdaDUAL. Looks at the busiest of the new task's servers: idle starts,
/// one incumbent starts iff M_new / M_old is below the threshold, two or
/// more rejects. When several lone incumbents sit on different servers,
/// M_old is the largest of their remaining sizes.
AdmissionDecision ada_dual(const LinkState& link, const CommTask& new_task, const CostModel& model);

/// SRSF(n): start iff every involved server has fewer than n active tasks.
AdmissionDecision srsf_n_admit(int n, const LinkState& link, const CommTask& new_task);

enum class CommPolicyKind { AdaDual, MaxConcurrent };

/// Communication scheduling policy, parsed from "ada-srsf" or "srsf:<n>".
struct SchedulerPolicy {
    CommPolicyKind kind = CommPolicyKind::AdaDual;
    int max_concurrent = 2;

    static SchedulerPolicy parse(const std::string& text);
    std::string to_string() const;
    /// Per-server cap enforced by the link state (2 for AdaDUAL).
    int link_cap() const { return max_concurrent; }

    AdmissionDecision decide(const LinkState& link, const CommTask& task, const CostModel& model) const;
    friend bool operator==(const SchedulerPolicy&, const SchedulerPolicy&) = default;
};

SchedulerPolicy ada_srsf_policy();
SchedulerPolicy srsf_n_policy(int n);

}  // namespace ccsched
