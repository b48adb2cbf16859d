#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace weigh {

class WeighError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration values. The CLI maps these to exit code 2.
class ConfigError : public WeighError {
public:
    using WeighError::WeighError;
};

class SlotOverflow : public WeighError {
public:
    SlotOverflow() : WeighError("weight vector is full") {}
};

class NotAValueAction : public WeighError {
public:
    NotAValueAction() : WeighError("End carries no value") {}
};

// One weighing operator: a signed value placed on the pan, or End.
class Action {
public:
    static Action value(double v);
    static Action end() { return Action(true, 0.0); }

    bool is_end() const { return end_; }
    // 0 for End.
    double value() const { return v_; }
    // "+10", "-0.05", "End"
    std::string label() const;

    friend bool operator==(const Action&, const Action&) = default;

private:
    Action(bool end, double v) : end_(end), v_(v) {}
    bool end_;
    double v_;
};

enum class PoolMode { Interval, Continuous };

std::string to_string(PoolMode mode);
PoolMode pool_mode_from_string(const std::string& s);

class ActionPool {
public:
    ActionPool(std::vector<Action> actions, PoolMode mode);

    // {-10, -5, -2, -1, +1, +2, +5, +10, End}
    static ActionPool interval();
    // 18 signed values from 0.01 to 5 plus End.
    static ActionPool continuous();
    static ActionPool for_mode(PoolMode mode);

    std::size_t size() const { return actions_.size(); }
    const Action& operator[](std::size_t i) const { return actions_.at(i); }
    const std::vector<Action>& actions() const { return actions_; }
    std::size_t end_index() const { return end_index_; }
    std::optional<std::size_t> index_of(const Action& a) const;
    PoolMode mode() const { return mode_; }
    // Largest |value| among value actions.
    double max_magnitude() const { return max_magnitude_; }

    friend bool operator==(const ActionPool& a, const ActionPool& b) {
        return a.mode_ == b.mode_ && a.actions_ == b.actions_;
    }

private:
    std::vector<Action> actions_;
    PoolMode mode_;
    std::size_t end_index_ = 0;
    double max_magnitude_ = 0.0;
};

// Fixed-capacity record of the values placed so far. Slots past filled() are zero.
class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(std::size_t capacity, bool integral = true);
    WeightVector(std::vector<double> slots, std::size_t filled, bool integral = true);

    std::size_t capacity() const { return slots_.size(); }
    std::size_t filled() const { return filled_; }
    bool full() const { return filled_ == slots_.size(); }
    bool integral() const { return integral_; }
    std::span<const double> slots() const { return slots_; }
    double operator[](std::size_t i) const { return slots_.at(i); }

    friend bool operator==(const WeightVector&, const WeightVector&) = default;
    friend WeightVector apply_update(const WeightVector& w, const Action& a);

private:
    std::vector<double> slots_;
    std::size_t filled_ = 0;
    bool integral_ = true;
};

// Returns w with a's value appended at slot w.filled(). Throws SlotOverflow or NotAValueAction.
WeightVector apply_update(const WeightVector& w, const Action& a);

double accumulated_value(const WeightVector& w);

struct EpisodeConfig {
    int max_steps = 8;
    ActionPool pool = ActionPool::interval();
    double gamma = 0.9;

    void validate() const;
    WeightVector empty_weights() const {
        return WeightVector(static_cast<std::size_t>(max_steps), pool.mode() == PoolMode::Interval);
    }
};

// True when the decision at step t ends the episode: End, or the last slot is being filled.
bool is_terminal(int t, const Action& a, const EpisodeConfig& cfg);

using Feature = std::shared_ptr<const std::vector<double>>;

struct EpisodeState {
    Feature feature;
    WeightVector weights;
};

}  // namespace weigh
