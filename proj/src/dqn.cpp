#include "weighcount/dqn.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace weigh {

QNetParams QNetParams::zeros(std::size_t inputs, std::size_t hidden, std::size_t outputs,
                             double weight_scale) {
    QNetParams p;
    p.inputs = inputs;
    p.hidden = hidden;
    p.outputs = outputs;
    p.weight_scale = weight_scale;
    p.w1.assign(hidden * inputs, 0.0);
    p.b1.assign(hidden, 0.0);
    p.w2.assign(outputs * hidden, 0.0);
    p.b2.assign(outputs, 0.0);
    return p;
}

QNetParams QNetParams::glorot(std::size_t inputs, std::size_t hidden, std::size_t outputs,
                              double weight_scale, Rng& rng) {
    QNetParams p = zeros(inputs, hidden, outputs, weight_scale);
    const double r1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    for (double& w : p.w1) {
        w = rng.uniform(-r1, r1);
    }
    const double r2 = std::sqrt(6.0 / static_cast<double>(hidden + outputs));
    for (double& w : p.w2) {
        w = rng.uniform(-r2, r2);
    }
    return p;
}

std::vector<double> encode_input(const QNetParams& p, const EpisodeState& s) {
    const std::size_t fdim = s.feature ? s.feature->size() : 0;
    const auto slots = s.weights.slots();
    if (fdim + slots.size() != p.inputs) {
        throw DimensionMismatch(fmt::format("network expects {} inputs, state has {} + {}", p.inputs,
                                            fdim, slots.size()));
    }
    std::vector<double> x;
    x.reserve(p.inputs);
    if (fdim) {
        x.insert(x.end(), s.feature->begin(), s.feature->end());
    }
    for (double v : slots) {
        x.push_back(v / p.weight_scale);
    }
    return x;
}

namespace {

// Hidden pre-activations and outputs for one input.
struct Activations {
    std::vector<double> pre;
    std::vector<double> q;
};

void run(const QNetParams& p, std::span<const double> x, Activations& act) {
    act.pre.assign(p.b1.begin(), p.b1.end());
    for (std::size_t h = 0; h < p.hidden; ++h) {
        const double* row = &p.w1[h * p.inputs];
        double sum = 0.0;
        for (std::size_t i = 0; i < p.inputs; ++i) {
            sum += row[i] * x[i];
        }
        act.pre[h] += sum;
    }
    act.q.assign(p.b2.begin(), p.b2.end());
    for (std::size_t o = 0; o < p.outputs; ++o) {
        const double* row = &p.w2[o * p.hidden];
        double sum = 0.0;
        for (std::size_t h = 0; h < p.hidden; ++h) {
            sum += row[h] * std::max(act.pre[h], 0.0);
        }
        act.q[o] += sum;
    }
}

// Accumulates d(loss)/d(params) for one sample given d(loss)/d(q).
void backprop(const QNetParams& p, std::span<const double> x, const Activations& act,
              std::span<const double> dq, QNetGrads& g, std::vector<double>& dpre) {
    dpre.assign(p.hidden, 0.0);
    for (std::size_t o = 0; o < p.outputs; ++o) {
        if (dq[o] == 0.0) {
            continue;
        }
        g.b2[o] += dq[o];
        double* grow = &g.w2[o * p.hidden];
        const double* wrow = &p.w2[o * p.hidden];
        for (std::size_t h = 0; h < p.hidden; ++h) {
            grow[h] += dq[o] * std::max(act.pre[h], 0.0);
            dpre[h] += dq[o] * wrow[h];
        }
    }
    for (std::size_t h = 0; h < p.hidden; ++h) {
        if (!(act.pre[h] > 0.0) || dpre[h] == 0.0) {
            continue;
        }
        g.b1[h] += dpre[h];
        double* grow = &g.w1[h * p.inputs];
        for (std::size_t i = 0; i < p.inputs; ++i) {
            grow[i] += dpre[h] * x[i];
        }
    }
}

void check_input(const QNetParams& p, std::span<const double> x) {
    if (x.size() != p.inputs) {
        throw DimensionMismatch(fmt::format("network expects {} inputs, got {}", p.inputs, x.size()));
    }
}

}  // namespace

std::vector<double> forward(const QNetParams& p, std::span<const double> input) {
    check_input(p, input);
    Activations act;
    run(p, input, act);
    return std::move(act.q);
}

std::vector<double> forward(const QNetParams& p, const EpisodeState& s) {
    return forward(p, encode_input(p, s));
}

double bellman_target(double reward, std::span<const double> q_next, bool terminal, double gamma) {
    if (terminal) {
        return reward;
    }
    return reward + gamma * *std::max_element(q_next.begin(), q_next.end());
}

LossAndGrads loss_and_grads(const QNetParams& p, const QNetParams& target,
                            std::span<const Transition> batch, double gamma) {
    if (batch.empty()) {
        throw EmptyBatch();
    }
    if (!p.same_shape(target)) {
        throw DimensionMismatch("online and target networks differ in shape");
    }
    LossAndGrads out{0.0, QNetParams::zeros(p.inputs, p.hidden, p.outputs, p.weight_scale)};
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Activations act;
    std::vector<double> dq(p.outputs), dpre;
    for (const Transition& tr : batch) {
        if (tr.action >= p.outputs) {
            throw DimensionMismatch("transition action index out of range");
        }
        double y = tr.reward;
        if (!tr.terminal) {
            y = bellman_target(tr.reward, forward(target, tr.next), false, gamma);
        }
        const auto x = encode_input(p, tr.state);
        run(p, x, act);
        const double residual = y - act.q[tr.action];
        out.loss += std::abs(residual) * inv_n;
        if (residual == 0.0) {
            continue;
        }
        std::fill(dq.begin(), dq.end(), 0.0);
        dq[tr.action] = (residual > 0.0 ? -1.0 : 1.0) * inv_n;
        backprop(p, x, act, dq, out.grads, dpre);
    }
    return out;
}

LossAndGrads cross_entropy_and_grads(const QNetParams& p, std::span<const LabeledState> batch) {
    if (batch.empty()) {
        throw EmptyBatch();
    }
    LossAndGrads out{0.0, QNetParams::zeros(p.inputs, p.hidden, p.outputs, p.weight_scale)};
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Activations act;
    std::vector<double> dq(p.outputs), dpre;
    for (const LabeledState& ls : batch) {
        if (ls.label >= p.outputs) {
            throw DimensionMismatch("label index out of range");
        }
        const auto x = encode_input(p, ls.state);
        run(p, x, act);
        const double top = *std::max_element(act.q.begin(), act.q.end());
        double z = 0.0;
        for (std::size_t o = 0; o < p.outputs; ++o) {
            dq[o] = std::exp(act.q[o] - top);
            z += dq[o];
        }
        out.loss += (std::log(z) + top - act.q[ls.label]) * inv_n;
        for (std::size_t o = 0; o < p.outputs; ++o) {
            dq[o] = (dq[o] / z - (o == ls.label ? 1.0 : 0.0)) * inv_n;
        }
        backprop(p, x, act, dq, out.grads, dpre);
    }
    return out;
}

QNetParams sgd_step(QNetParams p, const QNetGrads& grads, double lr) {
    if (!p.same_shape(grads)) {
        throw DimensionMismatch("gradient shape differs from parameters");
    }
    auto step = [lr](std::vector<double>& w, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= lr * g[i];
        }
    };
    step(p.w1, grads.w1);
    step(p.b1, grads.b1);
    step(p.w2, grads.w2);
    step(p.b2, grads.b2);
    return p;
}

std::size_t argmax(std::span<const double> q) {
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::size_t epsilon_greedy(std::span<const double> q, double eps, Rng& rng) {
    if (rng.uniform() < eps) {
        return static_cast<std::size_t>(rng.uniform_int(q.size()));
    }
    return argmax(q);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw ConfigError("replay capacity must be >= 1");
    }
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() == capacity_) {
        items_.pop_front();
    }
    items_.push_back(std::move(t));
}

std::vector<Transition> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) {
        throw EmptyBuffer();
    }
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(items_[rng.uniform_int(items_.size())]);
    }
    return out;
}

double EpsilonSchedule::at(int epoch) const {
    return std::max(start - epoch * step, floor);
}

void EpsilonSchedule::validate() const {
    if (!(start >= 0.0 && start <= 1.0 && floor >= 0.0 && floor <= 1.0 && step >= 0.0)) {
        throw ConfigError("epsilon schedule values must lie in [0, 1] with step >= 0");
    }
}

}  // namespace weigh
