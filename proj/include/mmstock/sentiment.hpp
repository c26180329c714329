#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mmstock/error.hpp"
#include "mmstock/ingest.hpp"
#include "mmstock/textprep.hpp"

namespace mmstock {

/// Polarity label in {-1, 0, 1} with the scorer's confidence in [0, 1].
struct SentimentScore {
    int label = 0;
    double confidence = 0.0;

    static SentimentScore make(int label, double confidence) {
        if (label < -1 || label > 1) throw InputError("sentiment label must be -1, 0 or 1");
        if (!(confidence >= 0.0 && confidence <= 1.0)) throw InputError("sentiment confidence must be in [0, 1]");
        return {label, confidence};
    }

    friend bool operator==(const SentimentScore&, const SentimentScore&) = default;
};

/// Engagement weights: alpha/beta/gamma on retweets/likes/comments, delta on followers.
struct WeightParams {
    double alpha = 0.3;
    double beta = 0.3;
    double gamma = 0.3;
    double delta = 0.1;

    void validate() const {
        if (!(alpha >= 0 && beta >= 0 && gamma >= 0 && delta >= 0))
            throw InputError("sentiment weights must be non-negative");
    }
};

inline double tweet_interaction(const RawPost& p, const WeightParams& w) {
    return w.alpha * static_cast<double>(p.retweets) + w.beta * static_cast<double>(p.likes) +
           w.gamma * static_cast<double>(p.comments);
}

inline double user_influence(const RawPost& p, const WeightParams& w) {
    return w.delta * static_cast<double>(p.followers);
}

inline double signed_sentiment(const SentimentScore& s) { return static_cast<double>(s.label) * s.confidence; }

inline double total_interaction(const RawPost& p) {
    return static_cast<double>(p.retweets) + static_cast<double>(p.likes) + static_cast<double>(p.comments);
}

/// T_i * U_i * S / TT_i, defined as 0 for posts without any engagement.
inline double weighted_sentiment(const RawPost& p, const SentimentScore& s, const WeightParams& w) {
    const double tt = total_interaction(p);
    if (tt == 0.0) return 0.0;
    return tweet_interaction(p, w) * user_influence(p, w) * signed_sentiment(s) / tt;
}

struct ScoredPost {
    RawPost post;
    Date trading_date;
    SentimentScore score;
    double interaction = 0.0;        // T_i
    double influence = 0.0;          // U_i
    double signed_score = 0.0;       // S
    double total_interactions = 0.0; // TT_i
    double weighted = 0.0;           // WS
};

inline ScoredPost make_scored_post(const RawPost& p, const Date& trading_date, const SentimentScore& s,
                                   const WeightParams& w) {
    ScoredPost sp{p, trading_date, s};
    sp.interaction = tweet_interaction(p, w);
    sp.influence = user_influence(p, w);
    sp.signed_score = signed_sentiment(s);
    sp.total_interactions = total_interaction(p);
    sp.weighted = weighted_sentiment(p, s, w);
    return sp;
}

struct DailySentiment {
    Date date;
    double mean_label = 0.0;
    double mean_conf = 0.0;
    double mean_ws = 0.0;
    std::size_t count = 0;

    friend bool operator==(const DailySentiment&, const DailySentiment&) = default;
};

/// Per-trading-day means over the posts assigned to each day. Days without
/// posts carry the previous day's means with count 0; the first day starts at 0.
inline std::vector<DailySentiment> aggregate_daily(const std::vector<ScoredPost>& scored,
                                                   const TradingCalendar& calendar) {
    struct Acc {
        double label = 0, conf = 0, ws = 0;
        std::size_t n = 0;
    };
    std::vector<Acc> acc(calendar.size());
    for (const auto& sp : scored) {
        auto idx = calendar.index_of(sp.trading_date);
        if (!idx) throw MisalignedInputs(format_date(sp.trading_date));
        auto& a = acc[*idx];
        a.label += sp.score.label;
        a.conf += sp.score.confidence;
        a.ws += sp.weighted;
        ++a.n;
    }
    std::vector<DailySentiment> out;
    out.reserve(calendar.size());
    DailySentiment prev{};
    for (std::size_t i = 0; i < calendar.size(); ++i) {
        DailySentiment d{calendar[i]};
        const auto& a = acc[i];
        if (a.n > 0) {
            const auto n = static_cast<double>(a.n);
            d.mean_label = a.label / n;
            d.mean_conf = a.conf / n;
            d.mean_ws = a.ws / n;
            d.count = a.n;
        } else {
            d.mean_label = prev.mean_label;
            d.mean_conf = prev.mean_conf;
            d.mean_ws = prev.mean_ws;
        }
        out.push_back(d);
        prev = d;
    }
    return out;
}

// ---- providers ------------------------------------------------------------

using Lexicon = std::unordered_map<std::string, int>;

/// `word<TAB>+1` or `word<TAB>-1` per line; blank lines and `#` lines skipped.
inline Lexicon parse_lexicon(std::istream& in) {
    Lexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw UnparsableLine(lineno, "expected word<TAB>polarity");
        std::string word = line.substr(0, tab);
        std::string pol = line.substr(tab + 1);
        int v = 0;
        if (pol == "+1" || pol == "1") v = 1;
        else if (pol == "-1") v = -1;
        else throw UnparsableLine(lineno, "polarity must be +1 or -1");
        lex[detail::ascii_lower(word)] = v;
    }
    return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_lexicon(in);
}

/// Offline scorer: label is the sign of (positive - negative) hits and the
/// confidence is |positive - negative| over the token count.
inline SentimentScore lexicon_score(const CleanText& text, const Lexicon& lexicon) {
    auto toks = text.tokens();
    long pos = 0, neg = 0;
    for (auto t : toks) {
        auto it = lexicon.find(std::string(t));
        if (it == lexicon.end()) continue;
        if (it->second > 0) ++pos;
        else if (it->second < 0) ++neg;
    }
    const long diff = pos - neg;
    const int label = diff > 0 ? 1 : (diff < 0 ? -1 : 0);
    const double conf = static_cast<double>(diff < 0 ? -diff : diff) /
                        static_cast<double>(std::max<std::size_t>(toks.size(), 1));
    return {label, std::clamp(conf, 0.0, 1.0)};
}

using ScoreTable = std::unordered_map<std::string, SentimentScore>;

/// JSON lines of `{"id": ..., "label": -1|0|1, "confidence": [0,1]}`.
inline ScoreTable parse_replay_scores(std::istream& in) {
    using nlohmann::json;
    ScoreTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw UnparsableLine(lineno, e.what());
        }
        for (const char* f : {"id", "label", "confidence"})
            if (!obj.contains(f)) throw MissingField(f, lineno);
        if (!obj["id"].is_string() || !obj["label"].is_number_integer() || !obj["confidence"].is_number())
            throw UnparsableLine(lineno, "expected string id, integer label, numeric confidence");
        try {
            table.emplace(obj["id"].get<std::string>(),
                          SentimentScore::make(obj["label"].get<int>(), obj["confidence"].get<double>()));
        } catch (const InputError& e) {
            throw UnparsableLine(lineno, e.what());
        }
    }
    return table;
}

inline ScoreTable load_replay_scores(const std::string& path) {
    auto in = detail::open_input(path);
    return parse_replay_scores(in);
}

inline SentimentScore replay_score(const std::string& post_id, const ScoreTable& table) {
    auto it = table.find(post_id);
    if (it == table.end()) throw UnknownPostId(post_id);
    return it->second;
}

// ---- external LLM adapter -------------------------------------------------

inline constexpr std::string_view kContentPlaceholder = "{{CONTENT}}";

inline constexpr std::string_view kDefaultPromptTemplate =
    R"(You are an experienced financial analyst tasked with analyzing tweets and news related to a specific stock to gauge the overall sentiment and potential impact on the stock's price.

For each given tweet or news snippet about the target stock, please:

1. Carefully consider the sentiment expressed, looking at factors like:
 - Positive or negative language and tone
 - Mentions of financial performance, profits/losses, business developments
 - Discussion of stock price movements, investor confidence
 - Overall implications of the content for the stock
2. Based on your analysis, provide the sentiment label (positive, negative, or neutral) and a sentiment score (between 0 and 1) representing the probability of the sentiment label (e.g., a score of 0.8 for a negative label means there is an 80% probability that the tweet is negative).
3. Provide the sentiment score for each text item, along with a one-sentence explanation for your score.

Please look at the 'Content' column and analyze each row. Then, add columns for sentiment label and scoring (between 0 and 1) in the file.

Finally, please summarize your findings with:

- The average sentiment score across all the tweets/news
- A brief paragraph highlighting the key positive and negative drivers of sentiment based on the text provided. What are the main factors influencing the overall sentiment?

Remember to consider the financial and investing context carefully, not just generic sentiment. Focus on how the information may impact the stock and investor perceptions.

{{CONTENT}}
)";

inline std::string load_prompt_template(const std::string& path) {
    auto in = detail::open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Renders the batch as an `Index<TAB>Content` table into the template's
/// placeholder and returns the request payload:
/// `{"prompt": ..., "items": [{"index": i, "content": ...}, ...]}`.
inline nlohmann::json external_adapter_request(const std::vector<CleanText>& texts,
                                               std::string_view prompt_template = kDefaultPromptTemplate) {
    auto pos = prompt_template.find(kContentPlaceholder);
    if (pos == std::string_view::npos)
        throw InputError("prompt template lacks the " + std::string(kContentPlaceholder) + " placeholder");
    std::string table = "Index\tContent\n";
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < texts.size(); ++i) {
        table += std::to_string(i) + '\t' + texts[i].str() + '\n';
        items.push_back({{"index", i}, {"content", texts[i].str()}});
    }
    std::string prompt(prompt_template.substr(0, pos));
    prompt += table;
    prompt += prompt_template.substr(pos + kContentPlaceholder.size());
    return {{"prompt", prompt}, {"items", items}};
}

/// Accepts either an array of rows or `{"items": [...]}`. Each row needs a
/// `label` in {positive, negative, neutral} and a `score` in [0, 1].
inline std::vector<SentimentScore> parse_external_response(const nlohmann::json& response) {
    const nlohmann::json* rows = &response;
    if (response.is_object()) {
        auto it = response.find("items");
        if (it == response.end()) throw MalformedResponse(0, "missing 'items'");
        rows = &*it;
    }
    if (!rows->is_array()) throw MalformedResponse(0, "expected an array of rows");
    std::vector<SentimentScore> out;
    out.reserve(rows->size());
    for (std::size_t i = 0; i < rows->size(); ++i) {
        const auto& row = (*rows)[i];
        if (!row.is_object()) throw MalformedResponse(i, "row is not an object");
        auto lab = row.find("label");
        if (lab == row.end() || !lab->is_string()) throw MalformedResponse(i, "missing label");
        auto sc = row.find("score");
        if (sc == row.end() || !sc->is_number()) throw MalformedResponse(i, "missing score");
        const double score = sc->get<double>();
        if (!(score >= 0.0 && score <= 1.0)) throw MalformedResponse(i, "score outside [0, 1]");
        const std::string l = detail::ascii_lower(lab->get<std::string>());
        int label = 0;
        if (l == "positive") label = 1;
        else if (l == "negative") label = -1;
        else if (l == "neutral") label = 0;
        else throw MalformedResponse(i, "unknown label '" + l + "'");
        out.push_back({label, score});
    }
    return out;
}

/// Scores a cleaned post. Implementations must allow concurrent calls.
class SentimentProvider {
public:
    virtual ~SentimentProvider() = default;
    virtual std::string name() const = 0;
    virtual bool deterministic() const = 0;
    virtual SentimentScore score(const RawPost& post, const CleanText& text) const = 0;
};

class LexiconProvider final : public SentimentProvider {
public:
    explicit LexiconProvider(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
    std::string name() const override { return "lexicon"; }
    bool deterministic() const override { return true; }
    SentimentScore score(const RawPost&, const CleanText& text) const override {
        return lexicon_score(text, lexicon_);
    }

private:
    Lexicon lexicon_;
};

/// Replays precomputed scores keyed by post id.
class ReplayProvider final : public SentimentProvider {
public:
    ReplayProvider(ScoreTable table, std::string name = "replay") : table_(std::move(table)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    bool deterministic() const override { return true; }
    SentimentScore score(const RawPost& post, const CleanText&) const override {
        return replay_score(post.id, table_);
    }

private:
    ScoreTable table_;
    std::string name_;
};

/// Scores every post of a batch with `provider` and computes the weighted terms.
inline std::vector<ScoredPost> score_posts(const std::vector<RawPost>& posts, const TradingCalendar& calendar,
                                           const SentimentProvider& provider, const WordSet& stopwords,
                                           const WeightParams& weights, const CleanOptions& clean = {}) {
    std::vector<ScoredPost> out;
    out.reserve(posts.size());
    for (const auto& a : assign_to_trading_days(calendar, posts)) {
        auto text = clean_text(a.post->text, stopwords, clean);
        out.push_back(make_scored_post(*a.post, calendar[a.day], provider.score(*a.post, text), weights));
    }
    return out;
}

}  // namespace mmstock
