#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "weighcount/core.hpp"
#include "weighcount/rng.hpp"

namespace weigh {

class DimensionMismatch : public WeighError {
public:
    using WeighError::WeighError;
};

class EmptyBatch : public WeighError {
public:
    EmptyBatch() : WeighError("batch is empty") {}
};

class EmptyBuffer : public WeighError {
public:
    EmptyBuffer() : WeighError("replay buffer is empty") {}
};

// Two-layer MLP: q = w2 * relu(w1 * x + b1) + b2. Matrices are row-major
// (w1 is hidden x inputs, w2 is outputs x hidden). The same layout holds gradients.
struct QNetParams {
    std::size_t inputs = 0;
    std::size_t hidden = 0;
    std::size_t outputs = 0;
    // Weight-vector slots are divided by this before entering the network.
    double weight_scale = 10.0;
    std::vector<double> w1, b1, w2, b2;

    static QNetParams zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs,
                            double weight_scale = 10.0);
    // Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
    static QNetParams glorot(std::size_t inputs, std::size_t hidden, std::size_t outputs,
                             double weight_scale, Rng& rng);

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
    bool same_shape(const QNetParams& o) const {
        return inputs == o.inputs && hidden == o.hidden && outputs == o.outputs;
    }

    friend bool operator==(const QNetParams&, const QNetParams&) = default;
};

using QNetGrads = QNetParams;

struct Transition {
    EpisodeState state;
    std::size_t action = 0;
    EpisodeState next;
    double reward = 0.0;
    bool terminal = false;
    // Dataset patch the features came from; lets checkpoints store a reference
    // instead of the feature vector.
    std::size_t patch = 0;
};

// Feature followed by the scaled weight slots.
std::vector<double> encode_input(const QNetParams& p, const EpisodeState& s);

std::vector<double> forward(const QNetParams& p, std::span<const double> input);
std::vector<double> forward(const QNetParams& p, const EpisodeState& s);

// r if terminal, else r + gamma * max(q_next).
double bellman_target(double reward, std::span<const double> q_next, bool terminal, double gamma);

struct LossAndGrads {
    double loss = 0.0;
    QNetGrads grads;
};

// Mean absolute Bellman residual against a frozen target network, with the exact
// subgradient w.r.t. p (0 at zero residual). target is never differentiated.
LossAndGrads loss_and_grads(const QNetParams& p, const QNetParams& target,
                            std::span<const Transition> batch, double gamma);

struct LabeledState {
    EpisodeState state;
    std::size_t label = 0;
};

// Mean softmax cross-entropy of the network's outputs against action labels.
LossAndGrads cross_entropy_and_grads(const QNetParams& p, std::span<const LabeledState> batch);

QNetParams sgd_step(QNetParams p, const QNetGrads& grads, double lr);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> q);

// Always consumes one uniform draw, plus one index draw when exploring.
std::size_t epsilon_greedy(std::span<const double> q, double eps, Rng& rng);

inline QNetParams sync_target(const QNetParams& p) { return p; }

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    // n draws, uniform with replacement.
    std::vector<Transition> sample(std::size_t n, Rng& rng) const;

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return items_.empty(); }
    // Oldest first.
    const std::deque<Transition>& items() const { return items_; }

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

struct EpsilonSchedule {
    double start = 1.0;
    double floor = 0.1;
    double step = 0.05;

    // Exploration rate for the given epoch.
    double at(int epoch) const;
    void validate() const;
};

}  // namespace weigh
