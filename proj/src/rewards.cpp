#include "weighcount/rewards.hpp"

#include <cmath>
#include <limits>

namespace weigh {

void RewardConfig::validate() const {
    if (!(ending > 0.0)) {
        throw ConfigError("ending reward magnitude must be positive");
    }
    if (!(end_tolerance >= 0.0)) {
        throw ConfigError("end_tolerance must be >= 0");
    }
    if (!(squeeze_tolerance > 0.0)) {
        throw ConfigError("squeeze_tolerance must be > 0");
    }
}

RewardConfig RewardConfig::for_mode(PoolMode mode) {
    RewardConfig cfg;
    if (mode == PoolMode::Continuous) {
        cfg.end_tolerance = 0.005;
    }
    return cfg;
}

std::string to_string(RewardMode mode) {
    switch (mode) {
        case RewardMode::Full: return "full";
        case RewardMode::NoGuiding: return "no_guiding";
        case RewardMode::NoForceEnding: return "no_force_ending";
        case RewardMode::NoSqueezing: return "no_squeezing";
    }
    return "full";
}

RewardMode reward_mode_from_string(const std::string& s) {
    for (auto m : {RewardMode::Full, RewardMode::NoGuiding, RewardMode::NoForceEnding,
                   RewardMode::NoSqueezing}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw ConfigError("unknown reward mode '" + s + "'");
}

double StepContext::error_before() const { return std::abs(target - value_before); }
double StepContext::error_after() const { return std::abs(target - value_after); }

double ending_reward(double error, const RewardConfig& cfg) {
    return std::abs(error) <= cfg.end_tolerance ? cfg.ending : -cfg.ending;
}

double force_ending_reward(double error, const RewardConfig& cfg) {
    return ending_reward(error, cfg);
}

Action optimal_action(double target, double value, const ActionPool& pool, double tolerance) {
    if (std::abs(target - value) <= tolerance) {
        return Action::end();
    }
    const Action* best = nullptr;
    double best_err = std::numeric_limits<double>::infinity();
    for (const Action& a : pool.actions()) {
        if (a.is_end()) {
            continue;
        }
        double err = std::abs(target - (value + a.value()));
        bool better = err < best_err;
        if (!better && err == best_err) {
            double mag = std::abs(a.value());
            double best_mag = std::abs(best->value());
            better = mag < best_mag || (mag == best_mag && a.value() > 0.0);
        }
        if (better) {
            best = &a;
            best_err = err;
        }
    }
    return *best;
}

double guiding_reward(const StepContext& ctx, const Action& optimal, const RewardConfig& cfg) {
    if (ctx.action == optimal) {
        return cfg.optimal_bonus;
    }
    return ctx.error_after() < ctx.error_before() ? cfg.closer_bonus : cfg.farther_penalty;
}

int squeeze_gate(double value, double target, const RewardConfig& cfg) {
    return target * cfg.squeeze_tolerance - (value - target) >= 0.0 ? 1 : -1;
}

double squeezed_guiding_reward(const StepContext& ctx, const Action& optimal, const RewardConfig& cfg) {
    return ctx.action == optimal ? cfg.squeezed_optimal : cfg.squeezed_other;
}

namespace {

// Error-direction reward used when the guiding bonus is ablated.
double direction_reward(const StepContext& ctx, const RewardConfig& cfg) {
    return ctx.error_after() < ctx.error_before() ? cfg.closer_bonus : cfg.farther_penalty;
}

double intermediate_reward(const StepContext& ctx, const RewardConfig& cfg, const ActionPool& pool,
                           RewardMode mode) {
    Action optimal = optimal_action(ctx.target, ctx.value_before, pool, cfg.end_tolerance);
    bool squeezed = mode != RewardMode::NoSqueezing &&
                    squeeze_gate(ctx.value_after, ctx.target, cfg) < 0;
    if (squeezed) {
        return squeezed_guiding_reward(ctx, optimal, cfg);
    }
    if (mode == RewardMode::NoGuiding) {
        return direction_reward(ctx, cfg);
    }
    return guiding_reward(ctx, optimal, cfg);
}

}  // namespace

double step_reward(const StepContext& ctx, const RewardConfig& cfg, const ActionPool& pool,
                   RewardMode mode) {
    if (ctx.action.is_end()) {
        return ending_reward(ctx.error_before(), cfg);
    }
    if (ctx.forced && mode != RewardMode::NoForceEnding) {
        return force_ending_reward(ctx.error_after(), cfg);
    }
    return intermediate_reward(ctx, cfg, pool, mode);
}

}  // namespace weigh
