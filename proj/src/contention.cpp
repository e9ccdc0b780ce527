#include "ccsched/contention.hpp"

#include <algorithm>
#include <string>

namespace ccsched {

namespace {

// Relative slack for deciding that a task finishes inside a step.
constexpr double kFinishRelTol = 1e-12;
constexpr double kFinishAbsTol = 1e-15;

}  // namespace

LinkState::LinkState(int n_servers, CostModel model, int cap, ContentionScope scope)
    : model_(model), cap_(cap), scope_(scope), per_server_(static_cast<size_t>(n_servers))
{
    if (n_servers < 1) throw ConfigError("LinkState: n_servers must be >= 1");
    if (cap < 0) throw ConfigError("LinkState: cap must be >= 0");
    model_.validate();
}

bool LinkState::can_admit(std::span<const int> servers) const
{
    if (cap_ == 0) return true;
    return std::all_of(servers.begin(), servers.end(),
                       [&](int s) { return active_count(s) < cap_; });
}

int LinkState::max_active_count() const
{
    int m = 0;
    for (const auto& s : per_server_) m = std::max(m, static_cast<int>(s.size()));
    return m;
}

const ActiveComm* LinkState::find(int job_id) const
{
    for (const auto& a : active_)
        if (a.task.job_id == job_id) return &a;
    return nullptr;
}

void LinkState::admit(CommTask task, double now)
{
    if (find(task.job_id) != nullptr)
        throw ContentionError("job " + std::to_string(task.job_id) + " already has an active All-Reduce");
    std::sort(task.server_set.begin(), task.server_set.end());
    task.server_set.erase(std::unique(task.server_set.begin(), task.server_set.end()), task.server_set.end());
    if (task.server_set.size() < 2)
        throw ContentionError("job " + std::to_string(task.job_id) + ": All-Reduce must span >= 2 servers");
    for (int s : task.server_set) {
        if (s < 0 || s >= n_servers())
            throw ContentionError("job " + std::to_string(task.job_id) + ": server index out of range");
    }
    if (!can_admit(task.server_set))
        throw ContentionError("admitting job " + std::to_string(task.job_id) + " exceeds the contention cap of " +
                              std::to_string(cap_));
    if (task.bytes_remaining < 0.0 || task.bytes_remaining > task.total_bytes)
        throw ContentionError("job " + std::to_string(task.job_id) + ": bytes_remaining out of range");

    ActiveComm entry;
    entry.task = std::move(task);
    entry.task.started_at = now;
    entry.latency_remaining = entry.task.latency_paid ? 0.0 : model_.a;
    entry.task.latency_paid = true;
    entry.bytes_credited = entry.task.total_bytes - entry.task.bytes_remaining;
    for (int s : entry.task.server_set) per_server_[s].push_back(entry.task.job_id);
    active_.push_back(std::move(entry));
    recompute_rates();
}

void LinkState::recompute_rates()
{
    const int global_k = scope_ == ContentionScope::Global ? max_active_count() : 0;
    for (auto& a : active_) {
        int k = global_k;
        if (scope_ == ContentionScope::TaskServers) {
            for (int s : a.task.server_set) k = std::max(k, active_count(s));
        }
        a.k = std::max(k, 1);
        a.effective_byte_cost = a.k * model_.b + (a.k - 1) * model_.eta;
    }
}

std::vector<int> LinkState::advance(double dt)
{
    std::vector<int> done;
    // Sub-step at every completion inside the window so the survivors pick
    // up their new rate from that instant on.
    if (dt < 0.0) return done;
    while (!active_.empty()) {
        const double step_dt = std::min(dt, *next_completion_time());
        auto finished = step(step_dt);
        done.insert(done.end(), finished.begin(), finished.end());
        dt = step_dt >= dt ? 0.0 : dt - step_dt;
        if (finished.empty()) break;
    }
    return done;
}

std::vector<int> LinkState::step(double dt)
{
    std::vector<int> done;
    for (auto& a : active_) {
        const double ttf = a.time_to_finish();
        if (dt >= ttf - (kFinishRelTol * ttf + kFinishAbsTol)) {
            a.bytes_credited += a.task.bytes_remaining;
            a.task.bytes_remaining = 0.0;
            a.latency_remaining = 0.0;
            done.push_back(a.task.job_id);
            continue;
        }
        double t = dt;
        if (a.latency_remaining > 0.0) {
            const double used = std::min(t, a.latency_remaining);
            a.latency_remaining -= used;
            t -= used;
        }
        if (t > 0.0) {
            const double drained = std::min(t / a.effective_byte_cost, a.task.bytes_remaining);
            a.task.bytes_remaining -= drained;
            a.bytes_credited += drained;
        }
    }
    if (done.empty()) return done;

    for (int id : done) {
        auto it = std::find_if(active_.begin(), active_.end(), [&](const ActiveComm& a) { return a.task.job_id == id; });
        for (int s : it->task.server_set) std::erase(per_server_[s], id);
        finished_.push_back(std::move(*it));
        active_.erase(it);
    }
    recompute_rates();
    return done;
}

void LinkState::reset()
{
    for (auto& s : per_server_) s.clear();
    active_.clear();
    finished_.clear();
}

std::optional<double> LinkState::next_completion_time() const
{
    if (active_.empty()) return std::nullopt;
    double best = active_.front().time_to_finish();
    for (const auto& a : active_) best = std::min(best, a.time_to_finish());
    return best;
}

}  // namespace ccsched
