#include "weighcount/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include "json.hpp"

namespace weigh {

IntervalOutOfRange::IntervalOutOfRange(int interval)
    : WeighError(fmt::format("interval {} is outside the synthetic range", interval)) {}

void SynthConfig::validate() const {
    if (num_patches == 0) {
        throw ConfigError("num_patches must be >= 1");
    }
    if (max_interval < 0 || max_interval >= 80) {
        throw ConfigError("max_interval must lie in [0, 80)");
    }
    if (!(tail_exponent > 0.0)) {
        throw ConfigError("tail_exponent must be > 0");
    }
    if (!(zero_fraction >= 0.0 && zero_fraction <= 1.0)) {
        throw ConfigError("zero_fraction must lie in [0, 1]");
    }
    if (feature_dim == 0) {
        throw ConfigError("feature_dim must be >= 1");
    }
    if (!(noise_sigma >= 0.0)) {
        throw ConfigError("noise_sigma must be >= 0");
    }
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
        throw ConfigError("holdout_fraction must lie in [0, 1)");
    }
}

FeatureSynth::FeatureSynth(const SynthConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix_seed(cfg_.seed, 0));
    base_.resize(static_cast<std::size_t>(cfg_.max_interval) + 1);
    for (auto& column : base_) {
        column.resize(cfg_.feature_dim);
        for (double& v : column) {
            v = rng.normal();
        }
    }
}

const std::vector<double>& FeatureSynth::base(int interval) const {
    if (interval < 0 || interval > cfg_.max_interval) {
        throw IntervalOutOfRange(interval);
    }
    return base_[static_cast<std::size_t>(interval)];
}

std::vector<double> FeatureSynth::sample(int interval, Rng& rng) const {
    std::vector<double> f = base(interval);
    if (cfg_.noise_sigma > 0.0) {
        for (double& v : f) {
            v += cfg_.noise_sigma * rng.normal();
        }
    }
    return f;
}

std::vector<double> synth_features(int interval, const SynthConfig& cfg, Rng& rng) {
    return FeatureSynth(cfg).sample(interval, rng);
}

double target_of(const Patch& p, PoolMode mode) {
    return mode == PoolMode::Interval ? static_cast<double>(p.interval) : p.count;
}

Dataset make_dataset(const SynthConfig& cfg) {
    const FeatureSynth synth(cfg);
    Rng rng(mix_seed(cfg.seed, 1));
    std::vector<double> cdf;
    double total = 0.0;
    for (int k = 1; k <= cfg.max_interval; ++k) {
        total += std::pow(static_cast<double>(k), -cfg.tail_exponent);
        cdf.push_back(total);
    }
    const QuantizerConfig quant;
    Dataset ds;
    ds.max_interval = cfg.max_interval;
    ds.feature_dim = cfg.feature_dim;
    for (std::size_t i = 0; i < cfg.num_patches; ++i) {
        int interval = 0;
        if (!(rng.uniform() < cfg.zero_fraction) && !cdf.empty()) {
            const double u = rng.uniform() * total;
            interval = 1 + static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            interval = std::min(interval, cfg.max_interval);
        }
        Patch p;
        p.id = i;
        p.interval = interval;
        p.count = inverse_quantize(interval, quant);
        p.feature = std::make_shared<const std::vector<double>>(synth.sample(interval, rng));
        ds.patches.push_back(std::move(p));
    }
    std::vector<std::size_t> order(cfg.num_patches);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    const auto n_hold = static_cast<std::size_t>(std::llround(cfg.holdout_fraction * cfg.num_patches));
    ds.holdout.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
    ds.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
    std::sort(ds.holdout.begin(), ds.holdout.end());
    std::sort(ds.train.begin(), ds.train.end());
    return ds;
}

void write_dataset(std::ostream& out, const Dataset& ds) {
    std::vector<bool> held(ds.patches.size(), false);
    for (std::size_t i : ds.holdout) {
        held[i] = true;
    }
    for (std::size_t i = 0; i < ds.patches.size(); ++i) {
        const Patch& p = ds.patches[i];
        fmt::print(out, "{{\"id\":{},\"interval\":{},\"holdout\":{},\"feature\":[", p.id, p.interval,
                   held[i] ? "true" : "false");
        for (std::size_t k = 0; k < p.feature->size(); ++k) {
            fmt::print(out, "{}{}", k ? "," : "", (*p.feature)[k]);
        }
        out << "]}\n";
    }
}

Dataset read_dataset(std::istream& in) {
    Dataset ds;
    ds.max_interval = 0;
    std::string line;
    const QuantizerConfig quant;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw WeighError(std::string("dataset: ") + e.what());
        }
        Patch p;
        p.id = j.at("id").get<std::size_t>();
        p.interval = j.at("interval").get<int>();
        p.count = inverse_quantize(p.interval, quant);
        p.feature = std::make_shared<const std::vector<double>>(j.at("feature").get<std::vector<double>>());
        if (ds.patches.empty()) {
            ds.feature_dim = p.feature->size();
        } else if (p.feature->size() != ds.feature_dim) {
            throw DimensionMismatch("dataset rows disagree on feature dimension");
        }
        ds.max_interval = std::max(ds.max_interval, p.interval);
        (j.value("holdout", false) ? ds.holdout : ds.train).push_back(ds.patches.size());
        ds.patches.push_back(std::move(p));
    }
    return ds;
}

QFunction network_q(QNetParams params) {
    return [p = std::move(params)](const EpisodeState& s) { return forward(p, s); };
}

QFunction table_q(const ExactQTable& table, int target) {
    return [&table, target](const EpisodeState& s) {
        auto q = table.q(target, static_cast<int>(std::lround(accumulated_value(s.weights))),
                         static_cast<int>(s.weights.filled()));
        return std::vector<double>(q.begin(), q.end());
    };
}

QFunction greedy_oracle_q(double target, const ActionPool& pool, double tolerance) {
    return [target, pool, tolerance](const EpisodeState& s) {
        const Action best = optimal_action(target, accumulated_value(s.weights), pool, tolerance);
        std::vector<double> q(pool.size(), 0.0);
        q[*pool.index_of(best)] = 1.0;
        return q;
    };
}

std::vector<Transition> generate_episode(const Feature& feature, double target, const QFunction& q,
                                         const EpisodeSetup& setup, Rng& rng, double eps,
                                         std::size_t patch) {
    const EpisodeConfig& ep = setup.episode;
    const ActionPool& pool = ep.pool;
    std::vector<Transition> out;
    WeightVector w = ep.empty_weights();
    for (int t = 0; t < ep.max_steps; ++t) {
        EpisodeState s{feature, w};
        const auto qs = q(s);
        if (qs.size() != pool.size()) {
            throw DimensionMismatch("Q-vector length differs from the action pool");
        }
        const std::size_t a = epsilon_greedy(qs, eps, rng);
        const Action& act = pool[a];
        StepContext ctx;
        ctx.target = target;
        ctx.value_before = accumulated_value(w);
        ctx.action = act;
        ctx.step = t;
        const bool terminal = is_terminal(t, act, ep);
        if (act.is_end()) {
            ctx.value_after = ctx.value_before;
        } else {
            w = apply_update(w, act);
            ctx.value_after = accumulated_value(w);
            ctx.forced = terminal;
        }
        Transition tr;
        tr.state = std::move(s);
        tr.action = a;
        tr.next = EpisodeState{feature, w};
        tr.reward = step_reward(ctx, setup.rewards, pool, setup.mode);
        tr.terminal = terminal;
        tr.patch = patch;
        out.push_back(std::move(tr));
        if (terminal) {
            break;
        }
    }
    return out;
}

Rollout greedy_rollout(const Feature& feature, const QFunction& q, const EpisodeConfig& episode) {
    Rollout r;
    WeightVector w = episode.empty_weights();
    for (int t = 0; t < episode.max_steps; ++t) {
        RolloutStep step;
        step.t = t;
        step.q = q(EpisodeState{feature, w});
        step.action = argmax(step.q);
        const Action& act = episode.pool[step.action];
        if (!act.is_end()) {
            w = apply_update(w, act);
        }
        step.value = accumulated_value(w);
        r.steps.push_back(std::move(step));
        if (is_terminal(t, act, episode)) {
            break;
        }
    }
    r.value = accumulated_value(w);
    return r;
}

void TrainConfig::validate() const {
    if (epochs < 0) {
        throw ConfigError("epochs must be >= 0");
    }
    if (!(lr >= 0.0)) {
        throw ConfigError("lr must be >= 0");
    }
    if (update_every == 0 || batch_size == 0 || replay_capacity == 0 || hidden == 0) {
        throw ConfigError("update_every, batch_size, replay_capacity and hidden must be >= 1");
    }
    setup.episode.validate();
    setup.rewards.validate();
    epsilon.validate();
}

namespace {

QNetParams initial_params(const Dataset& data, const TrainConfig& cfg, Rng& rng) {
    const auto& ep = cfg.setup.episode;
    return QNetParams::glorot(data.feature_dim + static_cast<std::size_t>(ep.max_steps), cfg.hidden,
                              ep.pool.size(), ep.pool.max_magnitude(), rng);
}

}  // namespace

Trainer::Trainer(const Dataset& data, TrainConfig cfg)
    : data_(data), cfg_(std::move(cfg)), rng_(mix_seed(cfg_.seed, 2)), buffer_(cfg_.replay_capacity) {
    cfg_.validate();
    if (data_.train.empty()) {
        throw ConfigError("training split is empty");
    }
    params_ = initial_params(data_, cfg_, rng_);
    target_ = sync_target(params_);
    epsilon_ = cfg_.epsilon.at(0);
}

Trainer::Trainer(const Dataset& data, TrainConfig cfg, const TrainerState& resume)
    : data_(data), cfg_(std::move(cfg)), buffer_(cfg_.replay_capacity) {
    cfg_.validate();
    rng_.set_state(resume.rng_state);
    params_ = resume.params;
    target_ = resume.target;
    if (params_.inputs != data_.feature_dim + static_cast<std::size_t>(cfg_.setup.episode.max_steps) ||
        params_.outputs != cfg_.setup.episode.pool.size() || !params_.same_shape(target_)) {
        throw DimensionMismatch("checkpoint network does not match the configuration");
    }
    for (const Transition& t : resume.buffer) {
        buffer_.push(t);
    }
    pending_ = resume.pending;
    epoch_ = resume.epoch;
    epsilon_ = resume.epsilon;
    history_ = resume.history;
}

EpochMetrics Trainer::run_epoch() {
    const EpisodeSetup& setup = cfg_.setup;
    const PoolMode mode = setup.episode.pool.mode();
    target_ = sync_target(params_);
    epsilon_ = cfg_.epsilon.at(epoch_);
    const QFunction q = [this](const EpisodeState& s) { return forward(params_, s); };
    double loss_sum = 0.0;
    std::size_t updates = 0;
    for (std::size_t idx : data_.train) {
        const Patch& patch = data_.patches[idx];
        auto episode = generate_episode(patch.feature, target_of(patch, mode), q, setup, rng_, epsilon_, idx);
        for (Transition& tr : episode) {
            buffer_.push(std::move(tr));
            if (++pending_ < cfg_.update_every) {
                continue;
            }
            pending_ = 0;
            const auto batch = buffer_.sample(cfg_.batch_size, rng_);
            auto lg = loss_and_grads(params_, target_, batch, setup.episode.gamma);
            params_ = sgd_step(std::move(params_), lg.grads, cfg_.lr);
            loss_sum += lg.loss;
            ++updates;
        }
    }
    EpochMetrics m;
    m.epoch = epoch_;
    m.epsilon = epsilon_;
    m.updates = updates;
    m.mean_loss = updates ? loss_sum / static_cast<double>(updates) : 0.0;
    m.holdout_mae = data_.holdout.empty() ? 0.0 : interval_mae(params_, data_, data_.holdout, setup.episode);
    history_.push_back(m);
    ++epoch_;
    return m;
}

void Trainer::run(int epochs) {
    for (int i = 0; i < epochs; ++i) {
        run_epoch();
    }
}

TrainerState Trainer::snapshot() const {
    TrainerState s;
    s.epoch = epoch_;
    s.epsilon = epsilon_;
    s.rng_state = rng_.state();
    s.params = params_;
    s.target = target_;
    s.buffer.assign(buffer_.items().begin(), buffer_.items().end());
    s.pending = pending_;
    s.history = history_;
    return s;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    Trainer trainer(data, cfg);
    trainer.run_to_end();
    return {trainer.params(), trainer.history()};
}

TrainResult imitation_train(const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty()) {
        throw ConfigError("training split is empty");
    }
    const EpisodeSetup& setup = cfg.setup;
    const EpisodeConfig& ep = setup.episode;
    const ActionPool& pool = ep.pool;
    Rng rng(mix_seed(cfg.seed, 3));
    QNetParams params = initial_params(data, cfg, rng);
    std::deque<LabeledState> memory;
    std::vector<LabeledState> batch;
    std::size_t pending = 0;
    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss_sum = 0.0;
        std::size_t updates = 0;
        for (std::size_t idx : data.train) {
            const Patch& patch = data.patches[idx];
            const double target = target_of(patch, pool.mode());
            WeightVector w = ep.empty_weights();
            for (int t = 0; t < ep.max_steps; ++t) {
                EpisodeState s{patch.feature, w};
                const Action label = optimal_action(target, accumulated_value(w), pool, setup.rewards.end_tolerance);
                const Action& act = pool[argmax(forward(params, s))];
                if (memory.size() == cfg.replay_capacity) {
                    memory.pop_front();
                }
                memory.push_back(LabeledState{std::move(s), *pool.index_of(label)});
                if (++pending >= cfg.update_every) {
                    pending = 0;
                    batch.clear();
                    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
                        batch.push_back(memory[rng.uniform_int(memory.size())]);
                    }
                    auto lg = cross_entropy_and_grads(params, batch);
                    params = sgd_step(std::move(params), lg.grads, cfg.lr);
                    loss_sum += lg.loss;
                    ++updates;
                }
                if (act.is_end()) {
                    break;
                }
                w = apply_update(w, act);
            }
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.updates = updates;
        m.mean_loss = updates ? loss_sum / static_cast<double>(updates) : 0.0;
        m.holdout_mae = data.holdout.empty() ? 0.0 : interval_mae(params, data, data.holdout, ep);
        result.metrics.push_back(m);
    }
    result.params = std::move(params);
    return result;
}

int clamp_interval(double value, int max_interval) {
    return static_cast<int>(std::clamp<long>(std::lround(value), 0L, static_cast<long>(max_interval)));
}

namespace {

double final_error(double value, const Patch& p, const Dataset& data, PoolMode mode) {
    if (mode == PoolMode::Interval) {
        return std::abs(clamp_interval(value, data.max_interval) - p.interval);
    }
    return std::abs(std::max(value, 0.0) - p.count);
}

}  // namespace

double interval_mae(const QFunction& q, const Dataset& data, std::span<const std::size_t> indices,
                    const EpisodeConfig& episode) {
    if (indices.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t idx : indices) {
        const Patch& p = data.patches[idx];
        sum += final_error(greedy_rollout(p.feature, q, episode).value, p, data, episode.pool.mode());
    }
    return sum / static_cast<double>(indices.size());
}

double interval_mae(const QNetParams& params, const Dataset& data, std::span<const std::size_t> indices,
                    const EpisodeConfig& episode) {
    return interval_mae([&params](const EpisodeState& s) { return forward(params, s); }, data, indices,
                        episode);
}

double oracle_agreement(const QNetParams& params, const Dataset& data,
                        std::span<const std::size_t> indices, const EpisodeSetup& setup) {
    const EpisodeConfig& ep = setup.episode;
    std::size_t steps = 0;
    std::size_t agree = 0;
    for (std::size_t idx : indices) {
        const Patch& p = data.patches[idx];
        const double target = target_of(p, ep.pool.mode());
        WeightVector w = ep.empty_weights();
        for (int t = 0; t < ep.max_steps; ++t) {
            const Action& act = ep.pool[argmax(forward(params, EpisodeState{p.feature, w}))];
            const Action best = optimal_action(target, accumulated_value(w), ep.pool, setup.rewards.end_tolerance);
            ++steps;
            agree += act == best ? 1 : 0;
            if (act.is_end()) {
                break;
            }
            w = apply_update(w, act);
        }
    }
    return steps ? static_cast<double>(agree) / static_cast<double>(steps) : 1.0;
}

}  // namespace weigh
