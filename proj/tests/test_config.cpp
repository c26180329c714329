#include <gtest/gtest.h>

#include <sstream>

#include "mmstock/config.hpp"
#include "test_support.hpp"

using namespace mmstock;

namespace {

ExperimentConfig parse(const std::string& text, const std::filesystem::path& base = "/base") {
    std::istringstream in(text);
    return parse_config(in, base);
}

}  // namespace

TEST(Config, Defaults) {
    const auto cfg = parse("prices = p.csv\n");
    EXPECT_EQ(cfg.replicates, 10u);
    EXPECT_EQ(cfg.split_date, mmstock::testing::ymd(2022, 12, 31));
    EXPECT_EQ(cfg.jobs, 1u);
    EXPECT_EQ(cfg.provider, "lexicon");
    EXPECT_EQ(cfg.lstm.hidden_units, 256u);
    EXPECT_EQ(cfg.lstm.learning_rate, 0.001);
    EXPECT_EQ(cfg.lstm.batch_size, 128u);
    EXPECT_EQ(cfg.lstm.epochs, 100u);
    EXPECT_EQ(cfg.lstm.lookback, 30u);
    EXPECT_EQ(cfg.sim.initial_capital, 1'000'000.0);
    EXPECT_EQ(cfg.sim.profit_threshold, 0.02);
    EXPECT_EQ(cfg.sim.dip_threshold, 0.02);
    EXPECT_EQ(cfg.feature_sets.size(), 12u);
    EXPECT_EQ(cfg.weights.alpha, 0.3);
    EXPECT_EQ(cfg.weights.delta, 0.1);
    EXPECT_EQ(cfg.out_dir, "/base/out");
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesValuesAndPaths) {
    const auto cfg = parse(
        "# comment\n"
        "stock = MSFT   # trailing\n"
        "prices = data/p.csv\n"
        "tweets = /abs/t.jsonl\n"
        "hidden_units = 32\n"
        "learning_rate = 0.01\n"
        "split_date = 2023-06-30\n"
        "carry_rules = false\n"
        "min_likes = 100\n"
        "feature_sets = Prices, Prices-News\n"
        "seed = 7\n");
    EXPECT_EQ(cfg.stock, "MSFT");
    EXPECT_EQ(cfg.prices, "/base/data/p.csv");
    EXPECT_EQ(cfg.tweets, "/abs/t.jsonl");
    EXPECT_EQ(cfg.lstm.hidden_units, 32u);
    EXPECT_EQ(cfg.lstm.learning_rate, 0.01);
    EXPECT_EQ(cfg.lstm.seed, 7u);
    EXPECT_EQ(cfg.split_date, mmstock::testing::ymd(2023, 6, 30));
    EXPECT_FALSE(cfg.sim.carry_rules);
    EXPECT_EQ(cfg.min_likes, 100);
    EXPECT_EQ(cfg.feature_sets, (std::vector<FeatureSet>{FeatureSet::Prices, FeatureSet::PricesNews}));
}

TEST(Config, Errors) {
    EXPECT_THROW(parse("bogus = 1\n"), InputError);
    EXPECT_THROW(parse("prices = a\nprices = b\n"), UnparsableLine);
    EXPECT_THROW(parse("no equals sign\n"), UnparsableLine);
    EXPECT_THROW(parse("epochs = -3\n"), InputError);
    EXPECT_THROW(parse("learning_rate = fast\n"), InputError);
    EXPECT_THROW(parse("split_date = 31/12/2022\n"), InputError);
    EXPECT_THROW(parse("carry_rules = maybe\n"), InputError);
    EXPECT_THROW(parse("replicates = 0\nprices = p\n").validate(), InputError);
    EXPECT_THROW(parse("stock = X\n").validate(), InputError);
    EXPECT_THROW(parse("prices = p\nprovider = oracle\n").validate(), InputError);
    EXPECT_THROW(load_config("/nonexistent/dir/x.cfg"), InputError);
}

TEST(Config, FeatureSetList) {
    EXPECT_EQ(parse_feature_set_list("all").size(), 12u);
    EXPECT_EQ(parse_feature_set_list("Prices-Weighted-Tweets-News-RSI-SMA"),
              (std::vector<FeatureSet>{FeatureSet::PricesWeightedTweetsNewsRsiSma}));
    try {
        parse_feature_set_list("Prices,Prices-Emoji");
        FAIL();
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("Prices-Emoji"), std::string::npos);
        for (auto f : kAllFeatureSets) EXPECT_NE(msg.find(std::string(to_string(f))), std::string::npos);
    }
}

TEST(ConfigHash, StableAndSensitive) {
    const std::string base = "prices = p.csv\nseed = 1\nepochs = 5\n";
    const auto h = config_hash(parse(base));
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, config_hash(parse("epochs = 5\n# reordered\nseed = 1\nprices = p.csv\n")));
    EXPECT_NE(h, config_hash(parse("prices = p.csv\nseed = 2\nepochs = 5\n")));
    EXPECT_EQ(h, config_hash(parse(base + "jobs = 4\nout_dir = elsewhere\nsave_checkpoints = true\n")));
    EXPECT_EQ(h, config_hash(parse(base, "/another/base")));
}
