#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ccsched/model.hpp"

namespace ccsched {

class ContentionError : public Error {
public:
    using Error::Error;
};

/// How the contention level k of a task is derived from per-server counts.
enum class ContentionScope {
    TaskServers,  // max active count over the task's own servers
    Global,       // max active count over every server in the cluster
};

/// An admitted All-Reduce plus its integration state.
struct ActiveComm {
    CommTask task;
    double latency_remaining = 0.0;
    double bytes_credited = 0.0;
    int k = 1;
    double effective_byte_cost = 0.0;  // k*b + (k-1)*eta, seconds per byte

    double time_to_finish() const { return latency_remaining + task.bytes_remaining * effective_byte_cost; }
};

/// In-flight communication tasks on the server NICs.
///
/// Byte progress is piecewise linear: between two calls that change the
/// active set, every task drains at 1 / (k*b + (k-1)*eta) bytes per second.
/// The latency a is served once, at the start of the task, and a task in
/// its latency phase already counts towards k.
class LinkState {
public:
    /// cap = 0 means no limit on concurrent tasks per server.
    LinkState(int n_servers, CostModel model, int cap = 0,
              ContentionScope scope = ContentionScope::TaskServers);

    /// Throws ContentionError if the task is already active, spans fewer
    /// than two servers, or would push a server above the cap.
    void admit(CommTask task, double now);

    /// Moves every task forward by dt seconds; returns the job ids of the
    /// tasks that completed, in admission order.
    std::vector<int> advance(double dt);

    /// Time until the earliest completion if nothing else changes.
    std::optional<double> next_completion_time() const;

    bool can_admit(std::span<const int> servers) const;
    int active_count(int server) const { return static_cast<int>(per_server_[server].size()); }
    std::span<const int> active_on(int server) const { return per_server_[server]; }
    int max_active_count() const;
    bool empty() const { return active_.empty(); }
    size_t size() const { return active_.size(); }
    int n_servers() const { return static_cast<int>(per_server_.size()); }
    int cap() const { return cap_; }
    const CostModel& model() const { return model_; }

    const ActiveComm* find(int job_id) const;
    std::span<const ActiveComm> active() const { return active_; }

    /// Completed tasks with their credited byte totals, in completion order.
    std::span<const ActiveComm> finished() const { return finished_; }
    void clear_finished() { finished_.clear(); }

    /// Drops every task, keeping the model, cap and allocated storage.
    void reset();

private:
    std::vector<int> step(double dt);
    void recompute_rates();

    CostModel model_;
    int cap_;
    ContentionScope scope_;
    std::vector<std::vector<int>> per_server_;  // job ids
    std::vector<ActiveComm> active_;
    std::vector<ActiveComm> finished_;
};

}  // namespace ccsched
