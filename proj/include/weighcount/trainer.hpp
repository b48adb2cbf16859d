#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "weighcount/core.hpp"
#include "weighcount/dqn.hpp"
#include "weighcount/oracle.hpp"
#include "weighcount/quantizer.hpp"
#include "weighcount/rewards.hpp"
#include "weighcount/rng.hpp"

namespace weigh {

class IntervalOutOfRange : public WeighError {
public:
    explicit IntervalOutOfRange(int interval);
};

struct SynthConfig {
    std::size_t num_patches = 1000;
    int max_interval = 79;
    double tail_exponent = 1.2;  // nonzero targets k drawn with weight k^-tail_exponent
    double zero_fraction = 0.2;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.0;
    double holdout_fraction = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Stand-in for backbone features: a fixed random embedding per count interval
// (seeded by SynthConfig::seed) plus optional Gaussian noise.
class FeatureSynth {
public:
    explicit FeatureSynth(const SynthConfig& cfg);

    const std::vector<double>& base(int interval) const;
    std::vector<double> sample(int interval, Rng& rng) const;

private:
    SynthConfig cfg_;
    std::vector<std::vector<double>> base_;
};

std::vector<double> synth_features(int interval, const SynthConfig& cfg, Rng& rng);

struct Patch {
    std::size_t id = 0;
    int interval = 0;
    double count = 0.0;  // inverse_quantize(interval) with default quantizer settings
    Feature feature;
};

// Weighing target: the interval for integer pools, the count for continuous pools.
double target_of(const Patch& p, PoolMode mode);

struct Dataset {
    std::vector<Patch> patches;
    std::vector<std::size_t> train;    // indices into patches
    std::vector<std::size_t> holdout;  // indices into patches
    int max_interval = 79;
    std::size_t feature_dim = 0;
};

Dataset make_dataset(const SynthConfig& cfg);

// One JSON object per line: {"id":..,"interval":..,"holdout":..,"feature":[..]}.
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);

// Anything that scores every pool action for a state.
using QFunction = std::function<std::vector<double>(const EpisodeState&)>;

QFunction network_q(QNetParams params);
// Exact optimal Q-values for a known target.
QFunction table_q(const ExactQTable& table, int target);
// 1 for optimal_action, 0 for every other action.
QFunction greedy_oracle_q(double target, const ActionPool& pool, double tolerance);

struct EpisodeSetup {
    EpisodeConfig episode;
    RewardConfig rewards;
    RewardMode mode = RewardMode::Full;
};

// Rolls the weighing MDP from the empty weight vector with epsilon-greedy choices.
// The last transition is terminal.
std::vector<Transition> generate_episode(const Feature& feature, double target, const QFunction& q,
                                         const EpisodeSetup& setup, Rng& rng, double eps,
                                         std::size_t patch = 0);

struct RolloutStep {
    int t = 0;
    std::size_t action = 0;
    std::vector<double> q;
    double value = 0.0;  // accumulated value after the step
};

struct Rollout {
    std::vector<RolloutStep> steps;
    double value = 0.0;  // final accumulated value
};

// Greedy (eps = 0) rollout that keeps the Q-vectors; no rewards involved.
Rollout greedy_rollout(const Feature& feature, const QFunction& q, const EpisodeConfig& episode);

struct TrainConfig {
    int epochs = 200;
    double lr = 3e-2;
    std::size_t update_every = 100;
    std::size_t batch_size = 64;
    std::size_t replay_capacity = 50000;
    std::size_t hidden = 128;
    EpisodeSetup setup;
    EpsilonSchedule epsilon;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double epsilon = 0.0;
    double mean_loss = 0.0;
    std::size_t updates = 0;
    double holdout_mae = 0.0;  // interval MAE on the held-out split

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

// Everything needed to continue training bit-identically.
struct TrainerState {
    int epoch = 0;  // epochs completed
    double epsilon = 0.0;
    std::string rng_state;
    QNetParams params;
    QNetParams target;
    std::vector<Transition> buffer;  // oldest first
    std::size_t pending = 0;         // samples buffered since the last update
    std::vector<EpochMetrics> history;
};

class Trainer {
public:
    Trainer(const Dataset& data, TrainConfig cfg);
    Trainer(const Dataset& data, TrainConfig cfg, const TrainerState& resume);

    EpochMetrics run_epoch();
    void run(int epochs);
    // Runs until cfg.epochs epochs are done in total.
    void run_to_end() { run(cfg_.epochs - epoch_); }

    int epoch() const { return epoch_; }
    const QNetParams& params() const { return params_; }
    const std::vector<EpochMetrics>& history() const { return history_; }
    const TrainConfig& config() const { return cfg_; }
    TrainerState snapshot() const;

private:
    const Dataset& data_;
    TrainConfig cfg_;
    Rng rng_;
    QNetParams params_;
    QNetParams target_;
    ReplayBuffer buffer_;
    std::size_t pending_ = 0;
    int epoch_ = 0;
    double epsilon_ = 0.0;
    std::vector<EpochMetrics> history_;
};

struct TrainResult {
    QNetParams params;
    std::vector<EpochMetrics> metrics;
};

TrainResult train(const Dataset& data, const TrainConfig& cfg);

// Cross-entropy against optimal_action labels on states visited by the current
// greedy policy. Returns the policy network (its outputs are logits).
TrainResult imitation_train(const Dataset& data, const TrainConfig& cfg);

// Final interval of a greedy rollout, clamped to [0, max_interval].
int clamp_interval(double value, int max_interval);

// Mean |clamped interval - ground truth| over the given patches.
double interval_mae(const QFunction& q, const Dataset& data, std::span<const std::size_t> indices,
                    const EpisodeConfig& episode);
double interval_mae(const QNetParams& params, const Dataset& data, std::span<const std::size_t> indices,
                    const EpisodeConfig& episode);

// Fraction of greedy-rollout steps on which the chosen action equals optimal_action.
double oracle_agreement(const QNetParams& params, const Dataset& data,
                        std::span<const std::size_t> indices, const EpisodeSetup& setup);

}  // namespace weigh
