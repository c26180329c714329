#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mmstock/ingest.hpp"
#include "test_support.hpp"

using namespace mmstock;
using mmstock::testing::fixture;
using mmstock::testing::ymd;

namespace {

std::vector<PriceBar> parse_prices(const std::string& body) {
    std::istringstream in(std::string(kPriceCsvHeader) + "\n" + body);
    return parse_price_csv(in);
}

std::vector<RawPost> parse_posts(const std::string& body, PostKind kind, PostLoadOptions opts = {}) {
    std::istringstream in(body);
    return parse_posts_jsonl(in, kind, opts);
}

}  // namespace

TEST(PriceCsv, RowMapsToFields) {
    auto bars = parse_prices("2023-01-03,100,105,99,104,104,5000\n");
    ASSERT_EQ(bars.size(), 1u);
    EXPECT_EQ(bars[0].date, ymd(2023, 1, 3));
    EXPECT_EQ(bars[0].open, 100.0);
    EXPECT_EQ(bars[0].high, 105.0);
    EXPECT_EQ(bars[0].low, 99.0);
    EXPECT_EQ(bars[0].close, 104.0);
    EXPECT_EQ(bars[0].adj_close, 104.0);
    EXPECT_EQ(bars[0].volume, 5000);
}

TEST(PriceCsv, HighBelowOpenIsUnparsable) {
    try {
        parse_prices("2023-01-03,100,98,97,97.5,97.5,5000\n");
        FAIL() << "expected UnparsableRow";
    } catch (const UnparsableRow& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(PriceCsv, FiveRowFixture) {
    auto bars = load_price_csv(fixture("mini/prices.csv"));
    ASSERT_EQ(bars.size(), 5u);
    const Date expected[] = {ymd(2023, 1, 3), ymd(2023, 1, 4), ymd(2023, 1, 5), ymd(2023, 1, 6), ymd(2023, 1, 9)};
    for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(bars[i].date, expected[i]);
    EXPECT_EQ(bars[4].close, 107.0);
}

TEST(PriceCsv, Errors) {
    std::istringstream missing("Date,Open,High,Low,Close,Volume\n");
    try {
        parse_price_csv(missing);
        FAIL() << "expected MissingColumn";
    } catch (const MissingColumn& e) {
        EXPECT_EQ(e.column(), "Adj Close");
    }
    EXPECT_THROW(parse_prices("2023-01-03,100,105,99,104,104,5000\n2023-01-03,100,105,99,104,104,5000\n"),
                 DuplicateDate);
    EXPECT_THROW(parse_prices("2023-01-04,100,105,99,104,104,5000\n2023-01-03,100,105,99,104,104,5000\n"),
                 NonMonotonicDate);
    EXPECT_THROW(parse_prices("2023-01-03,abc,105,99,104,104,5000\n"), UnparsableRow);
    EXPECT_THROW(parse_prices("2023-01-03,100,105,99,104,104,-1\n"), UnparsableRow);
    EXPECT_THROW(parse_prices("2023-01-03,0,105,0,104,104,5\n"), UnparsableRow);
    EXPECT_THROW(parse_prices("2023-13-03,100,105,99,104,104,5\n"), UnparsableRow);
    EXPECT_THROW(load_price_csv(fixture("no_such_file.csv")), InputError);
}

TEST(PriceCsv, ColumnsLocatedByName) {
    std::istringstream in("Volume,Date,Close,Open,Low,High,Adj Close\n5000,2023-01-03,104,100,99,105,103.5\n");
    auto bars = parse_price_csv(in);
    ASSERT_EQ(bars.size(), 1u);
    EXPECT_EQ(bars[0].open, 100.0);
    EXPECT_EQ(bars[0].adj_close, 103.5);
}

TEST(PriceCsv, WriteThenReloadIsIdentity) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PriceBar> bars;
    auto day = std::chrono::sys_days{ymd(2020, 2, 27)};
    for (int i = 0; i < 200; ++i) {
        PriceBar b;
        b.date = Date{day};
        b.low = 10.0 + 90.0 * u(rng);
        b.high = b.low * (1.0 + 0.1 * u(rng));
        b.open = b.low + (b.high - b.low) * u(rng);
        b.close = b.low + (b.high - b.low) * u(rng);
        b.adj_close = b.close * (0.9 + 0.1 * u(rng));
        b.volume = static_cast<std::int64_t>(1e7 * u(rng));
        bars.push_back(b);
        day += std::chrono::days{1 + i % 3};
    }
    std::stringstream buf;
    write_price_csv(buf, bars);
    EXPECT_EQ(parse_price_csv(buf), bars);
}

TEST(Posts, TweetCountsMapDirectly) {
    auto posts = parse_posts(
        R"({"id":"x","ts":"2023-01-03T10:00:00Z","text":"hi","retweets":10,"likes":250,"comments":5,"followers":8000,"kind":"tweet"})"
        "\n",
        PostKind::tweet);
    ASSERT_EQ(posts.size(), 1u);
    EXPECT_EQ(posts[0].likes, 250);
    EXPECT_EQ(posts[0].retweets, 10);
    EXPECT_EQ(posts[0].comments, 5);
    EXPECT_EQ(posts[0].followers, 8000);
    EXPECT_EQ(posts[0].date, ymd(2023, 1, 3));
}

TEST(Posts, NewsCountsDefaultToZero) {
    auto posts = parse_posts(R"({"id":"n","ts":"2023-01-03T10:00:00Z","text":"headline"})" "\n", PostKind::news);
    ASSERT_EQ(posts.size(), 1u);
    EXPECT_EQ(posts[0].kind, PostKind::news);
    EXPECT_EQ(posts[0].retweets + posts[0].likes + posts[0].comments + posts[0].followers, 0);
    EXPECT_THROW(parse_posts(R"({"id":"n","ts":"2023-01-03","text":"h","likes":3})" "\n", PostKind::news),
                 UnparsableLine);
}

TEST(Posts, MinLikesFilter) {
    std::string body;
    for (int likes : {50, 100, 150})
        body += R"({"id":"p)" + std::to_string(likes) + R"(","ts":"2023-01-03T00:00:00Z","text":"t","retweets":0,"likes":)" +
                std::to_string(likes) + R"(,"comments":0,"followers":1})" "\n";
    EXPECT_EQ(parse_posts(body, PostKind::tweet, {100}).size(), 2u);
    EXPECT_EQ(parse_posts(body, PostKind::tweet).size(), 3u);
}

TEST(Posts, ErrorsCarryLineNumbers) {
    try {
        parse_posts("\n{\"id\":\"a\",\"ts\":\"2023-01-03\",\"text\":\"t\"}\n{not json\n", PostKind::news);
        FAIL();
    } catch (const UnparsableLine& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        parse_posts(R"({"id":"a","ts":"2023-01-03","text":"t","retweets":1,"likes":1,"comments":1})" "\n",
                    PostKind::tweet);
        FAIL();
    } catch (const MissingField& e) {
        EXPECT_EQ(e.name(), "followers");
        EXPECT_EQ(e.line(), 1u);
    }
    EXPECT_THROW(parse_posts(R"({"id":"a","text":"t"})" "\n", PostKind::news), MissingField);
    EXPECT_THROW(parse_posts(R"({"id":"a","ts":"yesterday","text":"t"})" "\n", PostKind::news), UnparsableLine);
    EXPECT_THROW(parse_posts(R"({"id":"a","ts":"2023-01-03","text":"t","kind":"tweet"})" "\n", PostKind::news),
                 UnparsableLine);
}

TEST(Posts, DuplicateIdsKeepFirst) {
    auto posts = parse_posts(R"({"id":"a","ts":"2023-01-03","text":"first"})" "\n"
                             R"({"id":"a","ts":"2023-01-04","text":"second"})" "\n",
                             PostKind::news);
    ASSERT_EQ(posts.size(), 1u);
    EXPECT_EQ(posts[0].text, "first");
}

TEST(Posts, TimestampsNormalizeToUtcDate) {
    EXPECT_EQ(parse_timestamp_utc_date("2023-01-09T20:15:00-05:00"), ymd(2023, 1, 10));
    EXPECT_EQ(parse_timestamp_utc_date("2023-01-09T01:15:00+0200"), ymd(2023, 1, 8));
    EXPECT_EQ(parse_timestamp_utc_date("2023-12-31T23:59:59.250Z"), ymd(2023, 12, 31));
    EXPECT_EQ(parse_timestamp_utc_date("2023-01-09"), ymd(2023, 1, 9));
    EXPECT_FALSE(parse_timestamp_utc_date("2023-01-09T25:00:00Z"));
}

TEST(Calendar, AssignsToNextTradingDay) {
    auto bars = load_price_csv(fixture("mini/prices.csv"));
    auto cal = TradingCalendar::from_bars(bars);
    auto tweets = load_posts_jsonl(fixture("mini/tweets.jsonl"), PostKind::tweet);
    auto assigned = assign_to_trading_days(cal, tweets);
    // Saturday 2023-01-07 lands on Monday 2023-01-09; 2023-01-10 UTC is past the calendar.
    ASSERT_EQ(assigned.size(), 2u);
    EXPECT_EQ(cal[assigned[0].day], ymd(2023, 1, 3));
    EXPECT_EQ(cal[assigned[1].day], ymd(2023, 1, 9));
    EXPECT_THROW(TradingCalendar({ymd(2023, 1, 4), ymd(2023, 1, 3)}), NonMonotonicDate);
}

TEST(ForwardFill, FillsGaps) {
    TradingCalendar cal({ymd(2023, 1, 2), ymd(2023, 1, 3), ymd(2023, 1, 4)});
    std::map<Date, double> s{{ymd(2023, 1, 2), 5.0}, {ymd(2023, 1, 4), 7.0}};
    auto out = forward_fill(cal, s);
    EXPECT_EQ(out, (std::map<Date, double>{{ymd(2023, 1, 2), 5.0}, {ymd(2023, 1, 3), 5.0}, {ymd(2023, 1, 4), 7.0}}));
}

TEST(ForwardFill, FullSeriesUnchanged) {
    TradingCalendar cal({ymd(2023, 1, 2), ymd(2023, 1, 3)});
    std::map<Date, double> s{{ymd(2023, 1, 2), 1.0}, {ymd(2023, 1, 3), 2.0}};
    EXPECT_EQ(forward_fill(cal, s), s);
}

TEST(ForwardFill, NoPriorValue) {
    TradingCalendar cal({ymd(2023, 1, 2), ymd(2023, 1, 3)});
    std::map<Date, double> s{{ymd(2023, 1, 3), 3.0}};
    try {
        forward_fill(cal, s);
        FAIL();
    } catch (const NoPriorValue& e) {
        EXPECT_EQ(e.date(), "2023-01-02");
    }
    EXPECT_EQ(forward_fill(cal, s, std::optional<double>(0.5)).at(ymd(2023, 1, 2)), 0.5);
}

TEST(ForwardFill, Idempotent) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Date> days;
        std::map<Date, int> s;
        auto d = std::chrono::sys_days{ymd(2022, 1, 3)};
        for (int i = 0; i < 40; ++i) {
            days.push_back(Date{d});
            if (i == 0 || rng() % 3 == 0) s[Date{d}] = static_cast<int>(rng() % 100);
            if (rng() % 5 == 0) s[Date{d - std::chrono::days{1}}] = -1;  // off-calendar observation
            d += std::chrono::days{1 + rng() % 3};
        }
        TradingCalendar cal(days);
        auto once = forward_fill(cal, s);
        EXPECT_EQ(forward_fill(cal, once), once);
        for (const auto& day : days) EXPECT_TRUE(once.count(day));
    }
}
