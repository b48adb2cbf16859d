#pragma once

// Reference implementations used as test oracles. Written independently of src/.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "weighcount/dqn.hpp"
#include "weighcount/quantizer.hpp"
#include "weighcount/rng.hpp"

namespace oracle {

using namespace weigh;

struct NaiveForward {
    std::vector<double> pre;  // hidden pre-activations
    std::vector<double> q;
};

inline NaiveForward naive_forward(const QNetParams& p, const EpisodeState& s) {
    std::vector<double> x(s.feature->begin(), s.feature->end());
    for (double w : s.weights.slots()) {
        x.push_back(w / p.weight_scale);
    }
    NaiveForward out;
    out.pre.assign(p.hidden, 0.0);
    for (std::size_t h = 0; h < p.hidden; ++h) {
        double z = p.b1[h];
        for (std::size_t i = 0; i < p.inputs; ++i) {
            z += p.w1[h * p.inputs + i] * x[i];
        }
        out.pre[h] = z;
    }
    out.q.assign(p.outputs, 0.0);
    for (std::size_t o = 0; o < p.outputs; ++o) {
        double z = p.b2[o];
        for (std::size_t h = 0; h < p.hidden; ++h) {
            z += p.w2[o * p.hidden + h] * std::max(out.pre[h], 0.0);
        }
        out.q[o] = z;
    }
    return out;
}

inline double naive_target(const QNetParams& target, const Transition& t, double gamma) {
    if (t.terminal) {
        return t.reward;
    }
    const auto q = naive_forward(target, t.next).q;
    return t.reward + gamma * *std::max_element(q.begin(), q.end());
}

inline double naive_loss(const QNetParams& p, const QNetParams& target, const std::vector<Transition>& batch,
                         double gamma) {
    double sum = 0.0;
    for (const Transition& t : batch) {
        sum += std::abs(naive_target(target, t, gamma) - naive_forward(p, t.state).q[t.action]);
    }
    return sum / static_cast<double>(batch.size());
}

// relu on/off pattern plus residual signs; a perturbation that changes it crossed a kink.
inline std::vector<int> kink_pattern(const QNetParams& p, const QNetParams& target,
                                     const std::vector<Transition>& batch, double gamma) {
    std::vector<int> pat;
    for (const Transition& t : batch) {
        const NaiveForward f = naive_forward(p, t.state);
        for (double z : f.pre) {
            pat.push_back(z > 0 ? 1 : (z < 0 ? -1 : 0));
        }
        const double r = naive_target(target, t, gamma) - f.q[t.action];
        pat.push_back(r > 0 ? 1 : (r < 0 ? -1 : 0));
    }
    return pat;
}

template <typename P>
auto& field(P& p, int which) {
    switch (which) {
        case 0: return p.w1;
        case 1: return p.b1;
        case 2: return p.w2;
        default: return p.b2;
    }
}

struct GradCheck {
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double worst = 0.0;  // largest relative error among checked parameters
};

// Central differences of the mean l1 Bellman loss, skipping parameters whose +-h
// perturbation moves any relu or residual across its kink (or lies within 1e-7 of one).
inline GradCheck check_gradients(const QNetParams& p, const QNetParams& target, const std::vector<Transition>& batch,
                                 double gamma, double h = 1e-5) {
    const QNetGrads g = loss_and_grads(p, target, batch, gamma).grads;
    const auto base = kink_pattern(p, target, batch, gamma);
    GradCheck res;
    for (int which = 0; which < 4; ++which) {
        for (std::size_t i = 0; i < field(p, which).size(); ++i) {
            QNetParams plus = p;
            QNetParams minus = p;
            QNetParams near_plus = p;
            QNetParams near_minus = p;
            field(plus, which)[i] += h;
            field(minus, which)[i] -= h;
            field(near_plus, which)[i] += 1e-7;
            field(near_minus, which)[i] -= 1e-7;
            if (kink_pattern(plus, target, batch, gamma) != base || kink_pattern(minus, target, batch, gamma) != base ||
                kink_pattern(near_plus, target, batch, gamma) != base ||
                kink_pattern(near_minus, target, batch, gamma) != base ||
                std::find(base.begin(), base.end(), 0) != base.end()) {
                ++res.skipped;
                continue;
            }
            const double numeric =
                (naive_loss(plus, target, batch, gamma) - naive_loss(minus, target, batch, gamma)) / (2 * h);
            const double analytic = field(g, which)[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            res.worst = std::max(res.worst, std::abs(numeric - analytic) / denom);
            ++res.checked;
        }
    }
    return res;
}

// Random network with input = feat + slots, and a random batch of transitions.
struct Problem {
    QNetParams params;
    QNetParams target;
    std::vector<Transition> batch;
};

inline Problem random_problem(Rng& rng, std::size_t feat, std::size_t slots, std::size_t hidden, std::size_t outputs,
                              std::size_t batch_size) {
    Problem pr;
    pr.params = QNetParams::glorot(feat + slots, hidden, outputs, 10.0, rng);
    pr.target = QNetParams::glorot(feat + slots, hidden, outputs, 10.0, rng);
    for (auto& b : pr.params.b1) b = rng.uniform(-0.5, 0.5);
    for (auto& b : pr.params.b2) b = rng.uniform(-0.5, 0.5);
    const ActionPool pool = ActionPool::interval();
    auto state = [&] {
        auto f = std::make_shared<std::vector<double>>(feat);
        for (double& x : *f) x = rng.normal();
        WeightVector w(slots);
        const auto n = rng.uniform_int(slots + 1);
        for (std::size_t i = 0; i < n; ++i) {
            w = apply_update(w, pool[rng.uniform_int(pool.size() - 1)]);
        }
        return EpisodeState{f, w};
    };
    for (std::size_t b = 0; b < batch_size; ++b) {
        Transition t;
        t.state = state();
        t.next = state();
        t.action = rng.uniform_int(outputs);
        t.reward = rng.uniform(-5, 5);
        t.terminal = rng.uniform() < 0.3;
        pr.batch.push_back(std::move(t));
    }
    return pr;
}

// Mean distance to the (up to) 3 nearest other dots, by full pairwise scan.
inline std::vector<double> brute_sigmas(const DotMap& dm, double beta) {
    std::vector<double> out;
    for (std::size_t i = 0; i < dm.dots.size(); ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < dm.dots.size(); ++j) {
            if (i != j) {
                d.push_back(std::hypot(dm.dots[i].x - dm.dots[j].x, dm.dots[i].y - dm.dots[j].y));
            }
        }
        std::sort(d.begin(), d.end());
        if (d.empty()) {
            out.push_back(beta * std::min(dm.width, dm.height) / 4.0);
            continue;
        }
        const std::size_t k = std::min<std::size_t>(3, d.size());
        double s = 0;
        for (std::size_t m = 0; m < k; ++m) s += d[m];
        out.push_back(beta * s / static_cast<double>(k));
    }
    return out;
}

inline DotMap random_dots(Rng& rng, int width, int height, std::size_t n) {
    DotMap dm{width, height, {}};
    for (std::size_t i = 0; i < n; ++i) {
        dm.dots.push_back({rng.uniform(0, width), rng.uniform(0, height)});
    }
    return dm;
}

}  // namespace oracle
