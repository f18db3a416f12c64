#include <gtest/gtest.h>

#include <random>

#include "peerlearn/baselines.hpp"
#include "peerlearn/errors.hpp"
#include "test_util.hpp"

using namespace peerlearn;

namespace {

StrategyConfig config(StrategyKind kind, DropSchedule schedule = {0.35, 10}, double lr = 0.1) {
    return StrategyConfig{kind, schedule, nn::OptimizerConfig{lr, 0}, nn::LossConfig{}};
}

nn::Model direct_step(const nn::Model& m, Batch batch, const IndexList& idx, double lr) {
    return nn::sgd_step(m, nn::gradient(m, to_examples(batch, idx), {}), lr);
}

}  // namespace

TEST(Strategy, NamesRoundTrip) {
    for (auto k : {StrategyKind::plain, StrategyKind::decoupling, StrategyKind::co_teaching,
                   StrategyKind::peer_learning}) {
        EXPECT_EQ(parse_strategy(to_string(k)), k);
    }
    EXPECT_THROW(parse_strategy("mentornet"), ConfigError);
    EXPECT_FALSE(uses_schedule(StrategyKind::plain));
    EXPECT_FALSE(uses_schedule(StrategyKind::decoupling));
    EXPECT_TRUE(uses_schedule(StrategyKind::co_teaching));
    EXPECT_TRUE(uses_schedule(StrategyKind::peer_learning));
}

TEST(Plain, EqualsGradientThenStep) {
    std::mt19937_64 rng(1);
    const auto samples = testutil::random_samples(rng, 12, 4, 3);
    const nn::Model m = nn::init_model({4, 5, 3}, 2);
    const nn::Model want = nn::sgd_step(m, nn::gradient(m, to_examples(samples), {}), 0.1);
    EXPECT_EQ(plain_step(m, samples, config(StrategyKind::plain)), want);
}

TEST(Plain, ZeroLearningRateIsIdentity) {
    std::mt19937_64 rng(1);
    const auto samples = testutil::random_samples(rng, 12, 4, 3);
    const nn::Model m = nn::init_model({4, 5, 3}, 2);
    EXPECT_EQ(plain_step(m, samples, config(StrategyKind::plain, {}, 0.0)), m);
}

TEST(Plain, ConvexProblemDescends) {
    std::mt19937_64 rng(3);
    const auto samples = testutil::random_samples(rng, 30, 4, 3);
    const auto ex = to_examples(samples);
    nn::Model m = nn::init_model({4, 3}, 2);
    double prev = nn::batch_loss(m, ex, {});
    for (int i = 0; i < 10; ++i) {
        m = plain_step(m, samples, config(StrategyKind::plain, {}, 0.05));
        const double cur = nn::batch_loss(m, ex, {});
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(Plain, EmptyBatch) {
    EXPECT_THROW(plain_step(nn::init_model({2, 2}, 1), Batch{}, config(StrategyKind::plain)),
                 ContractError);
}

TEST(Decoupling, IdenticalModelsDoNotMove) {
    std::mt19937_64 rng(1);
    const auto samples = testutil::random_samples(rng, 20, 4, 3);
    const nn::Model m = nn::init_model({4, 5, 3}, 2);
    const PairStep s = decoupling_step(m, m, samples, config(StrategyKind::decoupling));
    EXPECT_TRUE(s.update_h1.empty());
    EXPECT_EQ(s.h1, m);
    EXPECT_EQ(s.h2, m);
}

TEST(Decoupling, UpdatesOnlyOnDisagreement) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto samples = testutil::random_samples(rng, 2 + rng() % 30, 4, 3);
        const nn::Model a = nn::init_model({4, 5, 3}, rng());
        const nn::Model b = nn::init_model({4, 5, 3}, rng());
        const PairStep s = decoupling_step(a, b, samples, config(StrategyKind::decoupling));
        EXPECT_EQ(s.update_h1, s.split.disagree_idx);
        EXPECT_EQ(s.update_h2, s.split.disagree_idx);
        if (!s.update_h1.empty()) {
            EXPECT_EQ(s.h1, direct_step(a, samples, s.update_h1, 0.1));
            EXPECT_EQ(s.h2, direct_step(b, samples, s.update_h2, 0.1));
        }
    }
}

TEST(Decoupling, SingleDisagreement) {
    // Two one-layer models that differ only on how they score class 1 for
    // inputs with a large second coordinate.
    nn::Model a = nn::zero_model({2, 2});
    a.params = {1, 0, 0, 1, 0, 0};
    nn::Model b = a;
    b.params[3] = -1;
    std::vector<data::Sample> batch(3);
    batch[0].features = {2, -1};
    batch[1].features = {0.1, 1};
    batch[2].features = {3, 0.5};
    batch[1].observed_label = batch[1].clean_label = 1;
    const PairStep s = decoupling_step(a, b, batch, config(StrategyKind::decoupling));
    ASSERT_EQ(s.split.disagree_idx, (IndexList{1}));
    const nn::Example only{batch[1].features, 1};
    const auto ga = nn::gradient(a, std::span<const nn::Example>(&only, 1), {});
    const auto gb = nn::gradient(b, std::span<const nn::Example>(&only, 1), {});
    for (std::size_t i = 0; i < a.params.size(); ++i) {
        EXPECT_NEAR(s.h1.params[i] - a.params[i], -0.1 * ga[i], 1e-15);
        EXPECT_NEAR(s.h2.params[i] - b.params[i], -0.1 * gb[i], 1e-15);
    }
}

TEST(CoTeaching, ZeroDropIsPlainOnBothNetworks) {
    std::mt19937_64 rng(4);
    const auto samples = testutil::random_samples(rng, 16, 4, 3);
    const nn::Model a = nn::init_model({4, 5, 3}, 1);
    const nn::Model b = nn::init_model({4, 5, 3}, 2);
    const auto cfg = config(StrategyKind::co_teaching, {0.35, 10});
    const PairStep s = co_teaching_step(a, b, samples, cfg, 0);
    EXPECT_EQ(s.h1, plain_step(a, samples, cfg));
    EXPECT_EQ(s.h2, plain_step(b, samples, cfg));
}

TEST(CoTeaching, SwapsWholeBatchSelections) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto samples = testutil::random_samples(rng, 2 + rng() % 30, 4, 3);
        const nn::Model a = nn::init_model({4, 5, 3}, rng());
        const nn::Model b = nn::init_model({4, 5, 3}, rng());
        const auto cfg = config(StrategyKind::co_teaching, {0.6, 3});
        const std::size_t epoch = rng() % 6;
        const PairStep s = co_teaching_step(a, b, samples, cfg, epoch);
        IndexList all(samples.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        IndexList r1 = select_small_loss(a, samples, all, drop_rate(cfg.schedule, epoch), {});
        IndexList r2 = select_small_loss(b, samples, all, drop_rate(cfg.schedule, epoch), {});
        std::sort(r1.begin(), r1.end());
        std::sort(r2.begin(), r2.end());
        EXPECT_EQ(s.update_h1, r2);
        EXPECT_EQ(s.update_h2, r1);
        // h1 sees nothing that only it picked.
        for (std::size_t i : r1) {
            if (!std::binary_search(r2.begin(), r2.end(), i)) {
                EXPECT_FALSE(std::binary_search(s.update_h1.begin(), s.update_h1.end(), i));
            }
        }
        EXPECT_EQ(s.h1, direct_step(a, samples, r2, 0.1));
        EXPECT_EQ(s.h2, direct_step(b, samples, r1, 0.1));
    }
}

TEST(TrainStrategy, PlainStartsWhereH1Starts) {
    const auto train = data::generate_gaussian_dataset(3, 20, 4, 3.0, 1);
    const auto test = data::generate_gaussian_dataset(3, 10, 4, 3.0, 2);
    const ModelSpec spec{{4, 6, 3}, nn::Activation::relu, 5, 6};
    const auto rec = train_strategy(config(StrategyKind::plain), spec, train, test, 3, 8, 1);
    EXPECT_EQ(rec.strategy, "plain");
    ASSERT_EQ(rec.rows.size(), 3u);
    EXPECT_FALSE(rec.rows[0].test_acc_h2.has_value());
    EXPECT_EQ(rec.summary.best_network, "h1");
    for (const auto& row : rec.rows) EXPECT_EQ(row.drop_rate, 0.0);
}

TEST(TrainStrategy, DecouplingIgnoresSchedule) {
    const auto train = data::generate_gaussian_dataset(3, 20, 4, 3.0, 1);
    const auto test = data::generate_gaussian_dataset(3, 10, 4, 3.0, 2);
    const ModelSpec spec{{4, 6, 3}, nn::Activation::relu, 5, 6};
    const auto rec = train_strategy(config(StrategyKind::decoupling, {0.5, 1}), spec, train, test, 3, 8, 1);
    for (const auto& row : rec.rows) {
        EXPECT_EQ(row.drop_rate, 0.0);
        EXPECT_TRUE(row.test_acc_h2.has_value());
        EXPECT_TRUE(row.mean_disagree.has_value());
    }
}

TEST(TrainStrategy, CoTeachingLogsSchedule) {
    const auto train = data::generate_gaussian_dataset(3, 20, 4, 3.0, 1);
    const auto test = data::generate_gaussian_dataset(3, 10, 4, 3.0, 2);
    const ModelSpec spec{{4, 6, 3}, nn::Activation::relu, 5, 6};
    const auto rec = train_strategy(config(StrategyKind::co_teaching, {0.5, 2}), spec, train, test, 4, 8, 1);
    for (const auto& row : rec.rows) EXPECT_EQ(row.drop_rate, drop_rate({0.5, 2}, row.epoch));
}

TEST(TrainStrategy, TwoNetworkStrategiesNeedDistinctSeeds) {
    const auto train = data::generate_gaussian_dataset(3, 20, 4, 3.0, 1);
    const ModelSpec spec{{4, 6, 3}, nn::Activation::relu, 5, 5};
    for (auto k : {StrategyKind::decoupling, StrategyKind::co_teaching, StrategyKind::peer_learning}) {
        EXPECT_THROW(train_strategy(config(k), spec, train, train, 1, 8, 1), ConfigError);
    }
}

TEST(TrainStrategy, Deterministic) {
    const auto train = data::apply_noise(data::generate_gaussian_dataset(3, 30, 4, 3.0, 1),
                                         {0.3, data::FlipModel::symmetric, 0.1, 1.0, 2});
    const auto test = data::generate_gaussian_dataset(3, 10, 4, 3.0, 2);
    const ModelSpec spec{{4, 6, 3}, nn::Activation::relu, 5, 6};
    for (auto k : {StrategyKind::plain, StrategyKind::decoupling, StrategyKind::co_teaching,
                   StrategyKind::peer_learning}) {
        EXPECT_EQ(train_strategy(config(k), spec, train, test, 4, 16, 9),
                  train_strategy(config(k), spec, train, test, 4, 16, 9));
    }
}
