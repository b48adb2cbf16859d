#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "weighcount/core.hpp"
#include "weighcount/rewards.hpp"

namespace weigh {

class Unreachable : public WeighError {
public:
    explicit Unreachable(int target);
};

struct OracleResult {
    int target = 0;
    std::vector<Action> sequence;  // value actions only
    std::size_t length = 0;
    double achieved = 0.0;
    bool balanced = false;  // achieved within tolerance of target
};

// Bounds of the accumulated-value search space.
struct ValueRange {
    int lo = -20;
    int hi = 120;
    bool contains(int v) const { return v >= lo && v <= hi; }
    std::size_t size() const { return static_cast<std::size_t>(hi - lo + 1); }
};

// Fewest value actions from 0 to target within max_steps; among equal lengths the
// lexicographically smallest sequence in pool order. Throws Unreachable.
OracleResult bfs_shortest(int target, const ActionPool& pool, int max_steps, ValueRange range = {});

// Applies optimal_action from 0 until the error is within tolerance or max_steps is used.
OracleResult greedy_sequence(double target, const ActionPool& pool, int max_steps, double tolerance = 0.0);

// Optimal Q-values of the integer weighing MDP by backward induction over the
// remaining steps. Indexed by (target, accumulated value, filled slots).
// Value actions landing outside the value range end the episode with farther_penalty.
class ExactQTable {
public:
    ExactQTable(const ActionPool& pool, int max_steps, double gamma, const RewardConfig& rewards,
                RewardMode mode = RewardMode::Full, int max_target = 80, ValueRange range = {});

    std::span<const double> q(int target, int value, int filled) const;
    std::size_t best_action(int target, int value, int filled) const;

    // Greedy rollout of the table's argmax policy from the empty weight vector.
    OracleResult rollout(int target) const;

    const ActionPool& pool() const { return pool_; }
    int max_steps() const { return max_steps_; }
    int max_target() const { return max_target_; }
    ValueRange range() const { return range_; }
    double gamma() const { return gamma_; }
    const RewardConfig& rewards() const { return rewards_; }
    RewardMode mode() const { return mode_; }

private:
    std::size_t offset(int target, int value, int filled) const;

    ActionPool pool_;
    int max_steps_;
    double gamma_;
    RewardConfig rewards_;
    RewardMode mode_;
    int max_target_;
    ValueRange range_;
    std::vector<double> table_;
};

// G,length,achieved,sequence rows for each result.
void write_oracle_csv(std::ostream& out, std::span<const OracleResult> results);

}  // namespace weigh
