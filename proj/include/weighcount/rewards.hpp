#pragma once

#include <string>

#include "weighcount/core.hpp"

namespace weigh {

struct RewardConfig {
    double ending = 5.0;             // +/- magnitude for End and forced ending
    double optimal_bonus = 3.0;      // chosen action equals the optimal action
    double closer_bonus = 1.0;       // error decreased
    double farther_penalty = -1.0;   // error did not decrease
    double squeezed_optimal = -1.0;  // optimal action while overshooting the tolerance band
    double squeezed_other = -3.0;    // any other action while overshooting
    double end_tolerance = 0.0;      // ending counts as balanced when error <= this
    double squeeze_tolerance = 0.5;  // overshoot allowed as a fraction of the target

    void validate() const;

    // Continuous pools cannot hit the target exactly, so End needs a tolerance
    // of half the smallest operator.
    static RewardConfig for_mode(PoolMode mode);
};

// Full design and the three single-removal ablations.
enum class RewardMode { Full, NoGuiding, NoForceEnding, NoSqueezing };

std::string to_string(RewardMode mode);
RewardMode reward_mode_from_string(const std::string& s);

struct StepContext {
    double target = 0.0;
    double value_before = 0.0;
    double value_after = 0.0;  // equals value_before for End
    Action action = Action::end();
    int step = 0;
    bool forced = false;  // this step filled the last slot

    double error_before() const;
    double error_after() const;
};

double ending_reward(double error, const RewardConfig& cfg);
double force_ending_reward(double error, const RewardConfig& cfg);

// End when |target - value| <= tolerance; otherwise the value action that minimizes
// |target - (value + a)|, ties broken by smaller |a| and then by the positive sign.
Action optimal_action(double target, double value, const ActionPool& pool, double tolerance = 0.0);

double guiding_reward(const StepContext& ctx, const Action& optimal, const RewardConfig& cfg);

// +1 while value - target <= target * squeeze_tolerance, else -1.
int squeeze_gate(double value, double target, const RewardConfig& cfg);

double squeezed_guiding_reward(const StepContext& ctx, const Action& optimal, const RewardConfig& cfg);

// Dispatches between ending, force-ending, guiding and squeezed rewards. Ablation modes
// swap out exactly one of the shaped terms.
double step_reward(const StepContext& ctx, const RewardConfig& cfg, const ActionPool& pool,
                   RewardMode mode = RewardMode::Full);

}  // namespace weigh
