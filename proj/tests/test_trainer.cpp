#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "weighcount/trainer.hpp"

using namespace weigh;

namespace {

Dataset tiny_dataset(std::vector<int> intervals, std::size_t dim = 8, std::uint64_t seed = 3) {
    SynthConfig sc;
    sc.feature_dim = dim;
    sc.seed = seed;
    const FeatureSynth synth(sc);
    Dataset ds;
    ds.feature_dim = dim;
    Rng rng(1);
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        Patch p;
        p.id = i;
        p.interval = intervals[i];
        p.count = inverse_quantize(p.interval, QuantizerConfig{});
        p.feature = std::make_shared<const std::vector<double>>(synth.sample(p.interval, rng));
        ds.patches.push_back(p);
        ds.train.push_back(i);
    }
    return ds;
}

StepContext context_of(const Transition& t, double target, const ActionPool& pool) {
    StepContext c;
    c.target = target;
    c.value_before = accumulated_value(t.state.weights);
    c.value_after = accumulated_value(t.next.weights);
    c.action = pool[t.action];
    c.step = static_cast<int>(t.state.weights.filled());
    c.forced = !c.action.is_end() && t.next.weights.full();
    return c;
}

}  // namespace

TEST_CASE("synthetic features") {
    SynthConfig sc;
    sc.feature_dim = 16;
    Rng r1(1), r2(2);
    CHECK(synth_features(3, sc, r1) == synth_features(3, sc, r2));
    std::set<std::vector<double>> seen;
    for (int c = 0; c <= 79; ++c) {
        seen.insert(synth_features(c, sc, r1));
    }
    CHECK(seen.size() == 80);
    CHECK_THROWS_AS(synth_features(80, sc, r1), IntervalOutOfRange);
    CHECK_THROWS_AS(synth_features(-1, sc, r1), IntervalOutOfRange);

    sc.noise_sigma = 0.1;
    const FeatureSynth synth(sc);
    const auto& base = synth.base(7);
    std::vector<double> mean(sc.feature_dim, 0.0);
    Rng rng(3);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto f = synth.sample(7, rng);
        for (std::size_t k = 0; k < f.size(); ++k) {
            mean[k] += f[k] / n;
        }
    }
    for (std::size_t k = 0; k < mean.size(); ++k) {
        CHECK(std::abs(mean[k] - base[k]) <= 3 * 0.1 / 100);
    }
}

TEST_CASE("synthetic dataset") {
    SynthConfig sc;
    sc.num_patches = 2000;
    const Dataset ds = make_dataset(sc);
    CHECK(ds.patches.size() == 2000);
    CHECK(ds.holdout.size() == 200);
    CHECK(ds.train.size() == 1800);
    std::size_t zeros = 0;
    std::size_t ones = 0;
    std::size_t high = 0;
    for (const Patch& p : ds.patches) {
        REQUIRE(p.interval >= 0);
        REQUIRE(p.interval <= sc.max_interval);
        REQUIRE(p.feature->size() == sc.feature_dim);
        zeros += p.interval == 0;
        ones += p.interval == 1;
        high += p.interval >= 40;
    }
    CHECK(std::abs(static_cast<double>(zeros) / 2000 - 0.2) < 0.03);
    CHECK(ones > high / 2);  // long tail
    std::set<std::size_t> split(ds.train.begin(), ds.train.end());
    split.insert(ds.holdout.begin(), ds.holdout.end());
    CHECK(split.size() == 2000);

    const Dataset again = make_dataset(sc);
    CHECK(again.holdout == ds.holdout);
    CHECK(*again.patches[17].feature == *ds.patches[17].feature);

    sc.max_interval = 80;
    CHECK_THROWS_AS(make_dataset(sc), ConfigError);
}

TEST_CASE("dataset snapshot round trip") {
    SynthConfig sc;
    sc.num_patches = 50;
    sc.noise_sigma = 0.3;
    const Dataset ds = make_dataset(sc);
    std::stringstream ss;
    write_dataset(ss, ds);
    const Dataset back = read_dataset(ss);
    REQUIRE(back.patches.size() == ds.patches.size());
    CHECK(back.holdout == ds.holdout);
    CHECK(back.train == ds.train);
    for (std::size_t i = 0; i < ds.patches.size(); ++i) {
        CHECK(back.patches[i].interval == ds.patches[i].interval);
        CHECK(*back.patches[i].feature == *ds.patches[i].feature);
    }
}

TEST_CASE("oracle episode for G = 45") {
    EpisodeSetup setup;
    const Dataset ds = tiny_dataset({45});
    Rng rng(1);
    const auto ep = generate_episode(ds.patches[0].feature, 45, greedy_oracle_q(45, setup.episode.pool, 0), setup,
                                     rng, 0.0);
    REQUIRE(ep.size() == 6);
    const std::vector<std::string> want{"+10", "+10", "+10", "+10", "+5", "End"};
    double total = 0;
    for (std::size_t i = 0; i < ep.size(); ++i) {
        CHECK(setup.episode.pool[ep[i].action].label() == want[i]);
        total += ep[i].reward;
    }
    // five optimal value steps at +3, then End at +5
    CHECK(total == 20);
    CHECK(ep.back().terminal);
}

TEST_CASE("End at step 0 on an empty patch") {
    EpisodeSetup setup;
    const Dataset ds = tiny_dataset({0});
    Rng rng(1);
    const auto ep = generate_episode(ds.patches[0].feature, 0, greedy_oracle_q(0, setup.episode.pool, 0), setup, rng, 0);
    REQUIRE(ep.size() == 1);
    CHECK(ep[0].terminal);
    CHECK(ep[0].reward == 5);
}

TEST_CASE("property: random episodes respect the horizon and reward contract") {
    const Dataset ds = tiny_dataset({0, 3, 17, 45, 79});
    for (RewardMode mode : {RewardMode::Full, RewardMode::NoGuiding, RewardMode::NoForceEnding, RewardMode::NoSqueezing}) {
        EpisodeSetup setup;
        setup.mode = mode;
        const ActionPool& pool = setup.episode.pool;
        Rng rng(7);
        const QFunction zero = [&](const EpisodeState&) { return std::vector<double>(pool.size(), 0.0); };
        for (int k = 0; k < 200; ++k) {
            const Patch& p = ds.patches[k % ds.patches.size()];
            const auto ep = generate_episode(p.feature, p.interval, zero, setup, rng, 1.0);
            REQUIRE(!ep.empty());
            REQUIRE(ep.size() <= 8);
            double running = 0;
            for (std::size_t i = 0; i < ep.size(); ++i) {
                const Transition& t = ep[i];
                CHECK(t.terminal == (i + 1 == ep.size()));
                CHECK(accumulated_value(t.state.weights) == running);
                if (!pool[t.action].is_end()) {
                    running += pool[t.action].value();
                }
                CHECK(accumulated_value(t.next.weights) == running);
                CHECK(step_reward(context_of(t, p.interval, pool), setup.rewards, pool, mode) == t.reward);
            }
        }
    }
}

TEST_CASE("ablation modes differ from full design only in rewards") {
    const Dataset ds = tiny_dataset({2, 9, 33, 60});
    const ActionPool pool = ActionPool::interval();
    const QFunction zero = [&](const EpisodeState&) { return std::vector<double>(pool.size(), 0.0); };
    EpisodeSetup full;
    for (RewardMode mode : {RewardMode::NoGuiding, RewardMode::NoForceEnding, RewardMode::NoSqueezing}) {
        EpisodeSetup other;
        other.mode = mode;
        Rng a(11), b(11);
        std::size_t differing = 0;
        for (int k = 0; k < 100; ++k) {
            const Patch& p = ds.patches[k % ds.patches.size()];
            const auto e1 = generate_episode(p.feature, p.interval, zero, full, a, 1.0);
            const auto e2 = generate_episode(p.feature, p.interval, zero, other, b, 1.0);
            REQUIRE(e1.size() == e2.size());
            for (std::size_t i = 0; i < e1.size(); ++i) {
                REQUIRE(e1[i].action == e2[i].action);
                REQUIRE(e1[i].next.weights == e2[i].next.weights);
                REQUIRE(e1[i].terminal == e2[i].terminal);
                differing += e1[i].reward != e2[i].reward;
            }
        }
        CHECK(differing > 0);
    }
}

TEST_CASE("exact table as the Q-function reproduces oracle rollouts") {
    const ActionPool pool = ActionPool::interval();
    EpisodeSetup setup;
    const ExactQTable table(pool, 8, 0.9, setup.rewards);
    const Dataset ds = tiny_dataset({1});
    for (int g = 0; g <= 80; ++g) {
        Rng rng(1);
        const auto ep = generate_episode(ds.patches[0].feature, g, table_q(table, g), setup, rng, 0.0);
        const OracleResult want = table.rollout(g);
        std::vector<Action> got;
        for (const Transition& t : ep) {
            if (!pool[t.action].is_end()) {
                got.push_back(pool[t.action]);
            }
        }
        CHECK(got == want.sequence);
        CHECK(accumulated_value(ep.back().next.weights) == want.achieved);
    }
}

TEST_CASE("greedy rollout") {
    const EpisodeConfig ep;
    const Dataset ds = tiny_dataset({45});
    const Rollout r = greedy_rollout(ds.patches[0].feature, greedy_oracle_q(45, ep.pool, 0), ep);
    CHECK(r.steps.size() == 6);
    CHECK(r.value == 45);
    CHECK(r.steps.back().value == 45);
    CHECK(ep.pool[r.steps.back().action].is_end());
}

TEST_CASE("clamp interval") {
    CHECK(clamp_interval(-4, 79) == 0);
    CHECK(clamp_interval(85, 79) == 79);
    CHECK(clamp_interval(12, 79) == 12);
}

TEST_CASE("training with zero epochs keeps the initial params") {
    const Dataset ds = tiny_dataset({1, 2, 3});
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.hidden = 8;
    const TrainResult r = train(ds, cfg);
    CHECK(r.metrics.empty());
    Trainer fresh(ds, cfg);
    CHECK(r.params == fresh.params());
}

TEST_CASE("seeded training is reproducible") {
    SynthConfig sc;
    sc.num_patches = 60;
    sc.feature_dim = 8;
    const Dataset ds = make_dataset(sc);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.hidden = 16;
    cfg.update_every = 10;
    const TrainResult a = train(ds, cfg);
    const TrainResult b = train(ds, cfg);
    CHECK(a.metrics == b.metrics);
    CHECK(a.params == b.params);
    REQUIRE(a.metrics.size() == 3);
    CHECK(a.metrics[0].updates > 0);
    CHECK(a.metrics[2].epsilon == doctest::Approx(0.9));

    cfg.lr = 0;
    const TrainResult frozen = train(ds, cfg);
    CHECK(frozen.params == Trainer(ds, cfg).params());
}

TEST_CASE("split run equals uninterrupted run") {
    SynthConfig sc;
    sc.num_patches = 60;
    sc.feature_dim = 8;
    const Dataset ds = make_dataset(sc);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.hidden = 16;
    cfg.update_every = 7;
    Trainer whole(ds, cfg);
    whole.run_to_end();
    Trainer first(ds, cfg);
    first.run(2);
    Trainer second(ds, cfg, first.snapshot());
    second.run_to_end();
    CHECK(second.history() == whole.history());
    CHECK(second.params() == whole.params());
}

TEST_CASE("imitation learns End on a single empty patch") {
    Dataset ds = tiny_dataset({0});
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.hidden = 8;
    cfg.update_every = 1;
    cfg.batch_size = 4;
    cfg.lr = 0.5;
    const TrainResult r = imitation_train(ds, cfg);
    const EpisodeConfig ep;
    const auto q = forward(r.params, EpisodeState{ds.patches[0].feature, ep.empty_weights()});
    CHECK(argmax(q) == ep.pool.end_index());
}

TEST_CASE("config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.update_every = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    SynthConfig sc;
    sc.holdout_fraction = 1;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}
