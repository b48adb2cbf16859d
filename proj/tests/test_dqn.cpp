#include <cmath>
#include <memory>

#include "doctest.h"
#include "support.hpp"
#include "weighcount/dqn.hpp"

using namespace weigh;

namespace {

EpisodeState make_state(std::vector<double> feat, WeightVector w) {
    return EpisodeState{std::make_shared<const std::vector<double>>(std::move(feat)), std::move(w)};
}

}  // namespace

TEST_CASE("forward of zero params is zero") {
    const QNetParams p = QNetParams::zeros(4 + 8, 16, 9);
    const auto q = forward(p, make_state({1, 2, 3, 4}, WeightVector({10, -5, 0, 0, 0, 0, 0, 0}, 2)));
    REQUIRE(q.size() == 9);
    for (double v : q) {
        CHECK(v == 0);
    }
}

TEST_CASE("forward on a hand-set 2x2 network") {
    // x = (feature 1, slot 5/10 = 0.5)
    QNetParams p = QNetParams::zeros(2, 2, 2);
    p.w1 = {2, 0, 0, -4};  // h = relu(2, -2) = (2, 0)
    p.b1 = {0, 0};
    p.w2 = {1, 3, -1, 1};
    p.b2 = {0.5, 0};
    const auto q = forward(p, make_state({1}, WeightVector(std::vector<double>{5}, 1)));
    CHECK(q[0] == 2.5);
    CHECK(q[1] == -2);
}

TEST_CASE("forward errors and shape") {
    Rng rng(1);
    const QNetParams p = QNetParams::glorot(3 + 8, 5, 9, 10, rng);
    CHECK_THROWS_AS(forward(p, make_state({1, 2}, WeightVector(8))), DimensionMismatch);
    const auto s = make_state({1, 2, 3}, WeightVector(8));
    CHECK(forward(p, s).size() == 9);
    CHECK(forward(p, s) == forward(p, s));
    const auto ref = oracle::naive_forward(p, s).q;
    const auto got = forward(p, s);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(got[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("glorot init bounds") {
    Rng rng(2);
    const QNetParams p = QNetParams::glorot(40, 128, 9, 10, rng);
    const double l1 = std::sqrt(6.0 / (40 + 128));
    const double l2 = std::sqrt(6.0 / (128 + 9));
    for (double w : p.w1) {
        REQUIRE(std::abs(w) <= l1);
    }
    for (double w : p.w2) {
        REQUIRE(std::abs(w) <= l2);
    }
    for (double b : p.b1) {
        CHECK(b == 0);
    }
}

TEST_CASE("bellman target") {
    const std::vector<double> q{0, 2, 1};
    CHECK(bellman_target(5, q, true, 0.9) == 5);
    CHECK(bellman_target(1, q, false, 0.9) == doctest::Approx(2.8));
    CHECK(bellman_target(-1, std::vector<double>{0, 0}, false, 0.9) == -1);
}

TEST_CASE("loss at a fixed point is zero with zero gradients") {
    QNetParams p = QNetParams::zeros(1 + 2, 2, 3);
    p.b2 = {1, 2, 3};
    Transition t;
    t.state = make_state({0.5}, WeightVector(2));
    t.next = t.state;
    t.action = 1;
    t.reward = 2;
    t.terminal = true;
    const std::vector<Transition> batch{t};
    const auto lg = loss_and_grads(p, p, batch, 0.9);
    CHECK(lg.loss == 0);
    for (double g : lg.grads.b2) {
        CHECK(g == 0);
    }
}

TEST_CASE("terminal loss ignores the target network and scales with rewards") {
    Rng rng(3);
    oracle::Problem pr = oracle::random_problem(rng, 3, 3, 4, 9, 12);
    for (Transition& t : pr.batch) {
        t.terminal = true;
    }
    const QNetParams zero = QNetParams::zeros(6, 4, 9);
    const double l = loss_and_grads(zero, pr.target, pr.batch, 0.9).loss;
    double want = 0;
    for (const Transition& t : pr.batch) {
        want += std::abs(t.reward);
    }
    CHECK(l == doctest::Approx(want / 12));
    CHECK(loss_and_grads(zero, zero, pr.batch, 0.9).loss == l);
    for (Transition& t : pr.batch) {
        t.reward *= 2;
    }
    CHECK(loss_and_grads(zero, pr.target, pr.batch, 0.9).loss == doctest::Approx(2 * l));
    CHECK_THROWS_AS(loss_and_grads(zero, zero, std::vector<Transition>{}, 0.9), EmptyBatch);
}

TEST_CASE("loss matches the reference implementation") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const oracle::Problem pr = oracle::random_problem(rng, 4, 2, 8, 9, 10);
        CHECK(loss_and_grads(pr.params, pr.target, pr.batch, 0.9).loss ==
              doctest::Approx(oracle::naive_loss(pr.params, pr.target, pr.batch, 0.9)).epsilon(1e-12));
    }
}

TEST_CASE("property: gradients match central differences") {
    Rng rng(5);
    std::size_t checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const oracle::Problem pr = oracle::random_problem(rng, 4, 2, 8, 9, 1 + rng.uniform_int(8));
        const oracle::GradCheck gc = oracle::check_gradients(pr.params, pr.target, pr.batch, 0.9);
        CHECK(gc.worst <= 1e-4);
        checked += gc.checked;
    }
    CHECK(checked > 1000);
}

TEST_CASE("sgd step") {
    Rng rng(6);
    const oracle::Problem pr = oracle::random_problem(rng, 4, 2, 8, 9, 5);
    const auto lg = loss_and_grads(pr.params, pr.target, pr.batch, 0.9);
    CHECK(sgd_step(pr.params, lg.grads, 0.0) == pr.params);

    QNetParams one = QNetParams::zeros(1, 1, 1);
    one.b2 = {3};
    QNetGrads g = QNetParams::zeros(1, 1, 1);
    g.b2 = {2};
    CHECK(sgd_step(one, g, 0.5).b2[0] == 2);
    CHECK_THROWS_AS(sgd_step(one, QNetParams::zeros(2, 1, 1), 0.1), DimensionMismatch);
}

TEST_CASE("sgd on a scalar l1 surrogate converges monotonically") {
    // single output bias fitting a terminal reward of 4
    QNetParams p = QNetParams::zeros(1 + 1, 1, 1);
    Transition t;
    t.state = make_state({0}, WeightVector(1));
    t.next = t.state;
    t.reward = 4;
    t.terminal = true;
    const std::vector<Transition> batch{t};
    double prev = loss_and_grads(p, p, batch, 0.9).loss;
    for (int i = 0; i < 40; ++i) {
        p = sgd_step(p, loss_and_grads(p, p, batch, 0.9).grads, 0.1);
        const double l = loss_and_grads(p, p, batch, 0.9).loss;
        REQUIRE(l <= prev + 1e-12);
        prev = l;
    }
    CHECK(prev == doctest::Approx(0).epsilon(1e-9));
}

TEST_CASE("argmax and epsilon greedy") {
    Rng rng(7);
    const std::vector<double> q{0, 3, 1, 0, 0, 0, 0, 0, 0};
    CHECK(argmax(q) == 1);
    CHECK(epsilon_greedy(q, 0, rng) == 1);
    CHECK(argmax(std::vector<double>{2, 2, 0}) == 0);

    std::vector<int> hits(9, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        ++hits[epsilon_greedy(q, 1.0, rng)];
    }
    const double mean = n / 9.0;
    const double sd = std::sqrt(n * (1.0 / 9) * (8.0 / 9));
    for (int h : hits) {
        CHECK(std::abs(h - mean) <= 3 * sd);
    }
}

TEST_CASE("sync target is a deep copy") {
    Rng rng(8);
    QNetParams p = QNetParams::glorot(5, 4, 9, 10, rng);
    const QNetParams copy = sync_target(p);
    CHECK(copy == p);
    const auto s = make_state({1, -1, 0.5}, WeightVector(std::vector<double>{10, 5}, 2));
    const auto before = forward(p, s);
    p.w1[0] += 1;
    p.b2[3] = 7;
    CHECK(copy != p);
    CHECK(forward(copy, s) == before);
}

TEST_CASE("replay buffer") {
    Rng rng(9);
    ReplayBuffer buf(2);
    CHECK_THROWS_AS(buf.sample(1, rng), EmptyBuffer);
    for (int i = 0; i < 3; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
    }
    CHECK(buf.size() == 2);
    CHECK(buf.items().front().reward == 1);

    ReplayBuffer ten(10);
    for (int i = 0; i < 10; ++i) {
        Transition t;
        t.action = static_cast<std::size_t>(i);
        ten.push(t);
    }
    Rng a(10), b(10);
    const auto s1 = ten.sample(16, a);
    const auto s2 = ten.sample(16, b);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(s1[i].action == s2[i].action);
    }
    std::vector<int> hits(10, 0);
    const int n = 100000;
    for (const Transition& t : ten.sample(n, a)) {
        ++hits[t.action];
    }
    const double sd = std::sqrt(n * 0.1 * 0.9);
    for (int h : hits) {
        CHECK(std::abs(h - n / 10.0) <= 3 * sd);
    }
}

TEST_CASE("epsilon schedule") {
    EpsilonSchedule e;
    CHECK(e.at(0) == 1.0);
    CHECK(e.at(1) == doctest::Approx(0.95));
    CHECK(e.at(18) == doctest::Approx(0.1));
    CHECK(e.at(100) == 0.1);
    e.floor = 2;
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("cross entropy floor on a fitted batch") {
    QNetParams p = QNetParams::zeros(1 + 1, 1, 3);
    p.b2 = {0, 20, 0};
    LabeledState ls{make_state({0}, WeightVector(1)), 1};
    const std::vector<LabeledState> batch{ls};
    CHECK(cross_entropy_and_grads(p, batch).loss <= 1e-3);
    p.b2 = {0, 0, 0};
    CHECK(cross_entropy_and_grads(p, batch).loss == doctest::Approx(std::log(3.0)));
}
