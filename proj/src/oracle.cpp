#include "weighcount/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace weigh {

Unreachable::Unreachable(int target)
    : WeighError(fmt::format("target {} is unreachable within the step limit", target)) {}

namespace {

void require_interval(const ActionPool& pool) {
    if (pool.mode() != PoolMode::Interval) {
        throw ConfigError("exact oracles need an integer action pool");
    }
}

}  // namespace

OracleResult bfs_shortest(int target, const ActionPool& pool, int max_steps, ValueRange range) {
    require_interval(pool);
    if (!range.contains(0) || !range.contains(target)) {
        throw Unreachable(target);
    }
    const auto idx = [&](int v) { return static_cast<std::size_t>(v - range.lo); };
    std::vector<int> depth(range.size(), -1);
    std::vector<int> parent(range.size(), 0);
    std::vector<std::size_t> via(range.size(), 0);
    std::deque<int> queue{0};
    depth[idx(0)] = 0;
    while (!queue.empty() && depth[idx(target)] < 0) {
        const int v = queue.front();
        queue.pop_front();
        if (depth[idx(v)] >= max_steps) {
            continue;
        }
        for (std::size_t a = 0; a < pool.size(); ++a) {
            if (pool[a].is_end()) {
                continue;
            }
            const int w = v + static_cast<int>(pool[a].value());
            if (!range.contains(w) || depth[idx(w)] >= 0) {
                continue;
            }
            depth[idx(w)] = depth[idx(v)] + 1;
            parent[idx(w)] = v;
            via[idx(w)] = a;
            queue.push_back(w);
        }
    }
    if (depth[idx(target)] < 0) {
        throw Unreachable(target);
    }
    OracleResult r;
    r.target = target;
    for (int v = target; v != 0; v = parent[idx(v)]) {
        r.sequence.push_back(pool[via[idx(v)]]);
    }
    std::reverse(r.sequence.begin(), r.sequence.end());
    r.length = r.sequence.size();
    r.achieved = target;
    r.balanced = true;
    return r;
}

OracleResult greedy_sequence(double target, const ActionPool& pool, int max_steps, double tolerance) {
    OracleResult r;
    r.target = static_cast<int>(std::lround(target));
    double v = 0.0;
    for (int t = 0; t < max_steps; ++t) {
        const Action a = optimal_action(target, v, pool, tolerance);
        if (a.is_end()) {
            break;
        }
        r.sequence.push_back(a);
        v += a.value();
    }
    r.length = r.sequence.size();
    r.achieved = v;
    r.balanced = std::abs(target - v) <= tolerance;
    return r;
}

ExactQTable::ExactQTable(const ActionPool& pool, int max_steps, double gamma, const RewardConfig& rewards,
                         RewardMode mode, int max_target, ValueRange range)
    : pool_(pool), max_steps_(max_steps), gamma_(gamma), rewards_(rewards), mode_(mode),
      max_target_(max_target), range_(range) {
    require_interval(pool_);
    if (max_steps_ < 1 || max_target_ < 0) {
        throw ConfigError("exact Q-table needs max_steps >= 1 and max_target >= 0");
    }
    const std::size_t n = pool_.size();
    table_.assign(static_cast<std::size_t>(max_target_ + 1) * range_.size() *
                      static_cast<std::size_t>(max_steps_) * n,
                  0.0);
    for (int filled = max_steps_ - 1; filled >= 0; --filled) {
        const bool last = filled == max_steps_ - 1;
        for (int g = 0; g <= max_target_; ++g) {
            for (int v = range_.lo; v <= range_.hi; ++v) {
                double* q = &table_[offset(g, v, filled)];
                for (std::size_t a = 0; a < n; ++a) {
                    const Action& act = pool_[a];
                    StepContext ctx;
                    ctx.target = g;
                    ctx.value_before = v;
                    ctx.action = act;
                    ctx.step = filled;
                    if (act.is_end()) {
                        ctx.value_after = v;
                        q[a] = step_reward(ctx, rewards_, pool_, mode_);
                        continue;
                    }
                    const int next = v + static_cast<int>(act.value());
                    if (!range_.contains(next)) {
                        q[a] = rewards_.farther_penalty;
                        continue;
                    }
                    ctx.value_after = next;
                    ctx.forced = last;
                    const double r = step_reward(ctx, rewards_, pool_, mode_);
                    if (last) {
                        q[a] = r;
                    } else {
                        auto qn = this->q(g, next, filled + 1);
                        q[a] = r + gamma_ * *std::max_element(qn.begin(), qn.end());
                    }
                }
            }
        }
    }
}

std::size_t ExactQTable::offset(int target, int value, int filled) const {
    if (target < 0 || target > max_target_ || !range_.contains(value) || filled < 0 ||
        filled >= max_steps_) {
        throw std::out_of_range(
            fmt::format("exact Q-table has no state (G={}, V={}, filled={})", target, value, filled));
    }
    const std::size_t n = pool_.size();
    return ((static_cast<std::size_t>(target) * range_.size() + static_cast<std::size_t>(value - range_.lo)) *
                static_cast<std::size_t>(max_steps_) +
            static_cast<std::size_t>(filled)) *
           n;
}

std::span<const double> ExactQTable::q(int target, int value, int filled) const {
    return {&table_[offset(target, value, filled)], pool_.size()};
}

std::size_t ExactQTable::best_action(int target, int value, int filled) const {
    auto qs = q(target, value, filled);
    return static_cast<std::size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
}

OracleResult ExactQTable::rollout(int target) const {
    OracleResult r;
    r.target = target;
    int v = 0;
    for (int filled = 0; filled < max_steps_; ++filled) {
        const Action& a = pool_[best_action(target, v, filled)];
        if (a.is_end()) {
            break;
        }
        r.sequence.push_back(a);
        v += static_cast<int>(a.value());
        if (!range_.contains(v)) {
            break;
        }
    }
    r.length = r.sequence.size();
    r.achieved = v;
    r.balanced = std::abs(target - v) <= rewards_.end_tolerance;
    return r;
}

void write_oracle_csv(std::ostream& out, std::span<const OracleResult> results) {
    out << "G,length,achieved,sequence\n";
    for (const OracleResult& r : results) {
        std::string seq;
        for (const Action& a : r.sequence) {
            if (!seq.empty()) {
                seq += ' ';
            }
            seq += a.label();
        }
        fmt::print(out, "{},{},{:.6f},{}\n", r.target, r.length, r.achieved, seq);
    }
}

}  // namespace weigh
