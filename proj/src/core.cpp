#include "weighcount/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace weigh {

Action Action::value(double v) {
    if (v == 0.0 || !std::isfinite(v)) {
        throw std::invalid_argument("value action must be finite and nonzero");
    }
    return Action(false, v);
}

std::string Action::label() const {
    if (end_) {
        return "End";
    }
    return fmt::format("{:+g}", v_);
}

std::string to_string(PoolMode mode) {
    return mode == PoolMode::Interval ? "interval" : "continuous";
}

PoolMode pool_mode_from_string(const std::string& s) {
    if (s == "interval") {
        return PoolMode::Interval;
    }
    if (s == "continuous") {
        return PoolMode::Continuous;
    }
    throw ConfigError("unknown pool mode '" + s + "'");
}

ActionPool::ActionPool(std::vector<Action> actions, PoolMode mode)
    : actions_(std::move(actions)), mode_(mode) {
    std::size_t ends = 0;
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        const Action& a = actions_[i];
        if (a.is_end()) {
            ++ends;
            end_index_ = i;
            continue;
        }
        if (mode_ == PoolMode::Interval && a.value() != std::round(a.value())) {
            throw ConfigError("interval pool values must be integers");
        }
        max_magnitude_ = std::max(max_magnitude_, std::abs(a.value()));
        for (std::size_t j = 0; j < i; ++j) {
            if (actions_[j] == a) {
                throw ConfigError("duplicate action " + a.label() + " in pool");
            }
        }
    }
    if (ends != 1) {
        throw ConfigError("action pool needs exactly one End entry");
    }
    if (actions_.size() < 2) {
        throw ConfigError("action pool needs at least one value action");
    }
}

ActionPool ActionPool::interval() {
    std::vector<Action> a;
    for (double v : {-10.0, -5.0, -2.0, -1.0, 1.0, 2.0, 5.0, 10.0}) {
        a.push_back(Action::value(v));
    }
    a.push_back(Action::end());
    return ActionPool(std::move(a), PoolMode::Interval);
}

ActionPool ActionPool::continuous() {
    std::vector<Action> a;
    for (double v : {-5.0, -2.0, -1.0, -0.5, -0.2, -0.1, -0.05, -0.02, -0.01,
                     0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
        a.push_back(Action::value(v));
    }
    a.push_back(Action::end());
    return ActionPool(std::move(a), PoolMode::Continuous);
}

ActionPool ActionPool::for_mode(PoolMode mode) {
    return mode == PoolMode::Interval ? interval() : continuous();
}

std::optional<std::size_t> ActionPool::index_of(const Action& a) const {
    auto it = std::find(actions_.begin(), actions_.end(), a);
    if (it == actions_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - actions_.begin());
}

WeightVector::WeightVector(std::size_t capacity, bool integral)
    : slots_(capacity, 0.0), integral_(integral) {}

WeightVector::WeightVector(std::vector<double> slots, std::size_t filled, bool integral)
    : slots_(std::move(slots)), filled_(filled), integral_(integral) {
    if (filled_ > slots_.size()) {
        throw std::invalid_argument("filled exceeds weight vector capacity");
    }
    for (std::size_t i = filled_; i < slots_.size(); ++i) {
        if (slots_[i] != 0.0) {
            throw std::invalid_argument("unfilled weight slots must be zero");
        }
    }
    if (integral_) {
        for (double v : slots_) {
            if (v != std::round(v)) {
                throw std::invalid_argument("interval-mode weight slots must be integers");
            }
        }
    }
}

WeightVector apply_update(const WeightVector& w, const Action& a) {
    if (a.is_end()) {
        throw NotAValueAction();
    }
    if (w.full()) {
        throw SlotOverflow();
    }
    if (w.integral_ && a.value() != std::round(a.value())) {
        throw std::invalid_argument("non-integer action applied to an interval-mode weight vector");
    }
    WeightVector out = w;
    out.slots_[out.filled_++] = a.value();
    return out;
}

double accumulated_value(const WeightVector& w) {
    auto s = w.slots();
    return std::accumulate(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(w.filled()), 0.0);
}

void EpisodeConfig::validate() const {
    if (max_steps < 1) {
        throw ConfigError("max_steps must be >= 1");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0, 1]");
    }
}

bool is_terminal(int t, const Action& a, const EpisodeConfig& cfg) {
    return a.is_end() || t == cfg.max_steps - 1;
}

}  // namespace weigh
