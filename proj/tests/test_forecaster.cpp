#include <gtest/gtest.h>

#include <random>

#include "lstm_oracle.hpp"
#include "mmstock/forecaster.hpp"
#include "test_support.hpp"

using namespace mmstock;
using mmstock::testing::oracle_forward;

namespace {

LstmConfig small_config(std::size_t hidden, std::uint64_t seed = 42) {
    LstmConfig c;
    c.hidden_units = hidden;
    c.seed = seed;
    return c;
}

std::vector<double> random_inputs(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) v = u(rng);
    return x;
}

WindowedDataset random_dataset(std::size_t samples, std::size_t lookback, std::size_t features, std::uint64_t seed,
                               double target = -1.0) {
    std::mt19937_64 rng(seed);
    WindowedDataset ds;
    ds.lookback = lookback;
    ds.n_features = features;
    ds.inputs = random_inputs(rng, samples * lookback * features);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t s = 0; s < samples; ++s) ds.targets.push_back(target >= 0.0 ? target : u(rng));
    return ds;
}

}  // namespace

TEST(InitWeights, ShapesAndRules) {
    const auto w = init_weights(small_config(8), 3);
    for (auto g : kGates) {
        EXPECT_EQ(w.W(g).size(), 3u * 8u);
        EXPECT_EQ(w.U(g).size(), 8u * 8u);
        EXPECT_EQ(w.b(g).size(), 8u);
    }
    EXPECT_EQ(w.size(), LstmWeights::parameter_count(3, 8));
    for (double b : w.b(Gate::forget)) EXPECT_EQ(b, 1.0);
    EXPECT_EQ(w.b_out(), kInitialOutputBias);
    const double k = 1.0 / std::sqrt(8.0);
    for (auto g : {Gate::input, Gate::output, Gate::cell}) {
        for (double v : w.W(g)) EXPECT_LE(std::abs(v), k);
        for (double v : w.U(g)) EXPECT_LE(std::abs(v), k);
        for (double v : w.b(g)) EXPECT_LE(std::abs(v), k);
    }
    for (double v : w.w_out()) EXPECT_LE(std::abs(v), k);
}

TEST(InitWeights, SeedDetermines) {
    EXPECT_EQ(init_weights(small_config(8, 7), 3), init_weights(small_config(8, 7), 3));
    EXPECT_NE(init_weights(small_config(8, 7), 3), init_weights(small_config(8, 8), 3));
    EXPECT_THROW(init_weights(small_config(8), 0), InputError);
    LstmConfig bad;
    bad.hidden_units = 0;
    EXPECT_THROW(init_weights(bad, 2), InputError);
}

TEST(Forward, ZeroWeightsGiveZero) {
    LstmWeights w(2, 4);
    const std::vector<double> x(6, 0.0);
    EXPECT_EQ(lstm_forward(w, x).prediction, 0.0);
}

TEST(Forward, MatchesOracle) {
    std::mt19937_64 rng(42);
    const auto w = init_weights(small_config(4, 42), 2);
    const auto x = random_inputs(rng, 3 * 2);
    EXPECT_NEAR(lstm_forward(w, x).prediction, oracle_forward(w, x), 1e-14);

    const auto x1 = random_inputs(rng, 2);
    EXPECT_NEAR(lstm_forward(w, x1).prediction, oracle_forward(w, x1), 1e-14);

    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t F = 1 + rng() % 4, H = 1 + rng() % 9, T = 1 + rng() % 7;
        auto wr = init_weights(small_config(H, rng()), F);
        for (double& p : wr.params()) p *= 3.0;
        const auto xr = random_inputs(rng, T * F);
        const auto cache = lstm_forward(wr, xr);
        EXPECT_NEAR(cache.prediction, oracle_forward(wr, xr), 1e-12);
        EXPECT_EQ(lstm_predict(wr, xr), cache.prediction);
        for (std::size_t k = 0; k < cache.i.size(); ++k) {
            for (double gate : {cache.i[k], cache.f[k], cache.o[k]}) {
                EXPECT_GT(gate, 0.0);
                EXPECT_LT(gate, 1.0);
            }
            EXPECT_LE(std::abs(cache.tanh_c[k]), 1.0);
        }
    }
}

TEST(Forward, RejectsBadInput) {
    const auto w = init_weights(small_config(4), 3);
    EXPECT_THROW(lstm_forward(w, std::vector<double>(4, 0.0)), InputError);
    EXPECT_THROW(lstm_forward(w, std::vector<double>{}), InputError);
    EXPECT_THROW(lstm_forward(w, std::vector<double>{1.0, std::nan(""), 0.0}), NonFiniteActivation);
}

TEST(Loss, Mse) {
    EXPECT_EQ(mse_loss(std::vector<double>{0.3, 0.4}, std::vector<double>{0.3, 0.4}), 0.0);
    EXPECT_EQ(mse_loss(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
    EXPECT_EQ(mse_loss(std::vector<double>{2}, std::vector<double>{3}), 1.0);
    EXPECT_THROW(mse_loss(std::vector<double>{2}, std::vector<double>{3, 4}), LengthMismatch);
}

TEST(Backward, MatchesFiniteDifferences) {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 6; ++trial) {
        const auto gc = mmstock::testing::random_grad_case(rng, 1 + rng() % 4, 1 + rng() % 8, 1 + rng() % 5, 2);
        const auto res = mmstock::testing::gradient_check(gc);
        EXPECT_LT(res.max_rel_error, 1e-4) << "trial " << trial;
    }
}

TEST(Backward, SingleSampleEqualsAccumulate) {
    std::mt19937_64 rng(5);
    const auto w = init_weights(small_config(5), 3);
    const auto x = random_inputs(rng, 12);
    const auto cache = lstm_forward(w, x);
    const auto g = backward(w, cache, 0.1);
    LstmGradients acc(3, 5);
    accumulate_gradients(w, cache, 2.0 * (cache.prediction - 0.1), acc);
    EXPECT_EQ(g, acc);
}

TEST(Backward, ZeroInputsGiveZeroInputWeightGradients) {
    const auto w = init_weights(small_config(6), 3);
    const std::vector<double> x(4 * 3, 0.0);
    const auto g = backward(w, lstm_forward(w, x), 0.9);
    for (auto gate : kGates)
        for (double v : g.W(gate)) EXPECT_EQ(v, 0.0);
    EXPECT_NE(g.b_out(), 0.0);
}

TEST(Backward, DeadReluGivesZeroGradients) {
    std::mt19937_64 rng(6);
    auto w = init_weights(small_config(6), 3);
    w.b_out() = -50.0;
    const auto cache = lstm_forward(w, random_inputs(rng, 12));
    EXPECT_LT(cache.head_preactivation, 0.0);
    EXPECT_EQ(cache.prediction, 0.0);
    const auto g = backward(w, cache, 0.7);
    for (double v : g.params()) EXPECT_EQ(v, 0.0);
}

TEST(Adam, ZeroGradientIsNoOp) {
    auto w = init_weights(small_config(4), 2);
    const auto before = w;
    AdamState st(w.size());
    adam_step(w, LstmGradients(2, 4), st, 0.001);
    EXPECT_EQ(w, before);
    EXPECT_EQ(st.t, 1u);
}

TEST(Adam, FirstStepClosedForm) {
    std::mt19937_64 rng(10);
    auto w = init_weights(small_config(4), 2);
    const auto before = w;
    LstmGradients g(2, 4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (double& v : g.params()) v = u(rng);
    AdamState st(w.size());
    const double lr = 0.001;
    adam_step(w, g, st, lr);
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double gk = g.params()[k];
        const double expected = before.params()[k] - lr * gk / (std::sqrt(gk * gk) + 1e-8);
        EXPECT_NEAR(w.params()[k], expected, 1e-15);
    }
}

TEST(Adam, TwoStepsDifferFromOneDoubleStep) {
    std::mt19937_64 rng(11);
    const auto x = random_inputs(rng, 4 * 2);
    const double target = 0.9;
    const auto w0 = init_weights(small_config(3), 2);

    auto w2 = w0;
    AdamState s2(w2.size());
    for (int step = 0; step < 2; ++step) adam_step(w2, backward(w2, lstm_forward(w2, x), target), s2, 0.01);

    auto w1 = w0;
    AdamState s1(w1.size());
    adam_step(w1, backward(w1, lstm_forward(w1, x), target), s1, 0.02);

    double max_diff = 0.0;
    for (std::size_t k = 0; k < w1.size(); ++k) max_diff = std::max(max_diff, std::abs(w1.params()[k] - w2.params()[k]));
    EXPECT_GT(max_diff, 1e-6);
}

TEST(Clip, GlobalNorm) {
    LstmGradients g(1, 1);
    std::fill(g.params().begin(), g.params().end(), 0.0);
    g.params()[0] = 3.0;
    g.params()[1] = 4.0;
    EXPECT_EQ(clip_global_norm(g, 2.5), 5.0);
    EXPECT_DOUBLE_EQ(g.params()[0], 1.5);
    EXPECT_DOUBLE_EQ(g.params()[1], 2.0);
    EXPECT_DOUBLE_EQ(clip_global_norm(g, 10.0), 2.5);
    EXPECT_DOUBLE_EQ(g.params()[0], 1.5);
}

TEST(Train, ConstantTargetConverges) {
    auto data = random_dataset(64, 5, 3, 1, 0.4);
    LstmConfig cfg;
    cfg.hidden_units = 16;
    cfg.batch_size = 16;
    const auto res = train(data, cfg);
    ASSERT_EQ(res.loss_history.size(), 100u);
    EXPECT_LT(res.loss_history.back(), 1e-4);
    int rises = 0;
    for (std::size_t e = 11; e < res.loss_history.size(); ++e)
        if (res.loss_history[e] > res.loss_history[e - 1]) ++rises;
    EXPECT_LE(rises, 3);
}

TEST(Train, DeterministicAndShortLastBatch) {
    auto data = random_dataset(37, 4, 2, 2);
    LstmConfig cfg;
    cfg.hidden_units = 6;
    cfg.batch_size = 10;
    cfg.epochs = 4;
    const auto a = train(data, cfg);
    const auto b = train(data, cfg);
    EXPECT_EQ(a.loss_history, b.loss_history);
    EXPECT_EQ(a.weights, b.weights);
    cfg.seed = 43;
    EXPECT_NE(train(data, cfg).loss_history, a.loss_history);
}

TEST(Train, Errors) {
    WindowedDataset empty;
    empty.lookback = 2;
    empty.n_features = 1;
    EXPECT_THROW(train(empty, LstmConfig{}), InputError);
    auto data = random_dataset(4, 2, 2, 3);
    data.inputs[1] = std::nan("");
    LstmConfig cfg;
    cfg.hidden_units = 4;
    cfg.epochs = 2;
    try {
        train(data, cfg);
        FAIL();
    } catch (const TrainingDiverged& e) {
        EXPECT_EQ(e.epoch(), 0u);
    }
}

TEST(Predict, MatchesPerSampleForward) {
    auto data = random_dataset(25, 6, 3, 4);
    const auto w = init_weights(small_config(7), 3);
    const auto preds = predict(w, data);
    ASSERT_EQ(preds.size(), 25u);
    for (std::size_t s = 0; s < data.size(); ++s) EXPECT_EQ(preds[s], lstm_forward(w, data.sample(s)).prediction);
    WindowedDataset empty;
    EXPECT_TRUE(predict(w, empty).empty());
}

TEST(Checkpoint, RoundTripIsExact) {
    auto data = random_dataset(20, 3, 2, 5);
    LstmConfig cfg;
    cfg.hidden_units = 5;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0123;
    cfg.seed = 987654321987ULL;
    const auto trained = train(data, cfg);

    const auto restored = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(trained.weights, cfg).dump()));
    EXPECT_EQ(restored.weights, trained.weights);
    EXPECT_EQ(restored.config.seed, cfg.seed);
    EXPECT_EQ(restored.config.learning_rate, cfg.learning_rate);
    EXPECT_EQ(restored.config.hidden_units, 5u);

    const auto dir = mmstock::testing::scratch_dir("checkpoint");
    save_checkpoint((dir / "w.json").string(), trained.weights, cfg);
    EXPECT_EQ(predict(load_checkpoint((dir / "w.json").string()).weights, data), predict(trained.weights, data));

    auto j = checkpoint_to_json(trained.weights, cfg);
    j["params"].erase(0);
    EXPECT_THROW(checkpoint_from_json(j), InputError);
    j = checkpoint_to_json(trained.weights, cfg);
    j["format"] = "other";
    EXPECT_THROW(checkpoint_from_json(j), InputError);
}
