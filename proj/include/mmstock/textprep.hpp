#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mmstock/error.hpp"

namespace mmstock {

using WordSet = std::unordered_set<std::string>;

/// Lowercase a-z words separated by single spaces. Only clean_text produces one.
class CleanText {
public:
    CleanText() = default;

    const std::string& str() const noexcept { return text_; }
    bool empty() const noexcept { return text_.empty(); }

    std::vector<std::string_view> tokens() const {
        std::vector<std::string_view> out;
        std::string_view s = text_;
        while (!s.empty()) {
            auto sp = s.find(' ');
            out.push_back(s.substr(0, sp));
            if (sp == std::string_view::npos) break;
            s.remove_prefix(sp + 1);
        }
        return out;
    }

    friend bool operator==(const CleanText&, const CleanText&) = default;

private:
    explicit CleanText(std::string t) : text_(std::move(t)) {}
    friend struct CleanTextAccess;

    std::string text_;
};

struct CleanTextAccess {
    static CleanText make(std::string t) { return CleanText(std::move(t)); }
};

struct CleanOptions {
    // `$MSFT` becomes `MSFT` when true; the whole cashtag is dropped when false.
    bool keep_cashtags = true;
};

/// One lowercase word per line; `#` starts a comment.
inline WordSet parse_stopwords(std::istream& in) {
    WordSet words;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::string w;
        for (char c : line)
            if (c != ' ' && c != '\t' && c != '\r') w.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        if (!w.empty()) words.insert(std::move(w));
    }
    return words;
}

inline WordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open stopword file '" + path + "'");
    return parse_stopwords(in);
}

namespace detail {

inline bool is_emoji_codepoint(char32_t cp) {
    return (cp >= 0x1F000 && cp <= 0x1FAFF)    // pictographs, emoticons, transport, flags
           || (cp >= 0x2600 && cp <= 0x27BF)   // misc symbols, dingbats
           || (cp >= 0x2300 && cp <= 0x23FF)   // misc technical
           || (cp >= 0x2190 && cp <= 0x21FF)   // arrows
           || (cp >= 0x2B00 && cp <= 0x2BFF)   // misc symbols and arrows
           || (cp >= 0xFE00 && cp <= 0xFE0F)   // variation selectors
           || (cp >= 0xE0020 && cp <= 0xE007F) // tag sequences
           || cp == 0x200D || cp == 0x20E3 || cp == 0x3030 || cp == 0x303D || cp == 0x3297 || cp == 0x3299 ||
           cp == 0x00A9 || cp == 0x00AE || cp == 0x2122;
}

/// Removes emoji codepoints; malformed UTF-8 bytes are dropped as well.
inline std::string strip_emoji(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            len = 1;
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            ++i;
            continue;
        }
        if (i + len > s.size()) break;
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            auto b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        if (!valid) {
            ++i;
            continue;
        }
        if (!is_emoji_codepoint(cp)) out.append(s.substr(i, len));
        i += len;
    }
    return out;
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && ascii_lower(s.substr(0, prefix.size())) == prefix;
}

inline bool is_url(std::string_view tok) {
    return starts_with_ci(tok, "http://") || starts_with_ci(tok, "https://") || starts_with_ci(tok, "www.");
}

inline bool is_reserved_word(std::string_view lowered_letters) {
    return lowered_letters == "rt" || lowered_letters == "fav" || lowered_letters == "via";
}

inline std::string letters_only_lower(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c >= 'A' && c <= 'Z') out.push_back(static_cast<char>(c - 'A' + 'a'));
        else if (c >= 'a' && c <= 'z') out.push_back(c);
    }
    return out;
}

inline bool is_ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace detail

/// Tweet/news cleaning pipeline, applied token by token:
/// URLs, hashtags, mentions and platform reserved words (RT, FAV, via) are
/// dropped; emoji codepoints are removed; text is lowercased; every byte
/// outside a-z is deleted; stopwords are dropped; survivors are joined by a
/// single space. Reserved words are checked again after stripping
/// (`R.T.` -> `rt`).
inline CleanText clean_text(std::string_view raw, const WordSet& stopwords, const CleanOptions& opts = {}) {
    std::vector<std::string> kept;
    std::size_t i = 0;
    while (i < raw.size()) {
        while (i < raw.size() && detail::is_ascii_space(raw[i])) ++i;
        std::size_t j = i;
        while (j < raw.size() && !detail::is_ascii_space(raw[j])) ++j;
        if (j == i) break;
        std::string_view tok = raw.substr(i, j - i);
        i = j;

        if (detail::is_url(tok)) continue;
        if (tok.front() == '#' || tok.front() == '@') continue;
        if (tok.front() == '$' && tok.size() > 1 &&
            ((tok[1] >= 'A' && tok[1] <= 'Z') || (tok[1] >= 'a' && tok[1] <= 'z'))) {
            if (!opts.keep_cashtags) continue;
            tok.remove_prefix(1);
        }
        if (detail::is_reserved_word(detail::ascii_lower(tok))) continue;

        std::string word = detail::letters_only_lower(detail::ascii_lower(detail::strip_emoji(tok)));
        if (word.empty() || detail::is_reserved_word(word) || stopwords.count(word)) continue;
        kept.push_back(std::move(word));
    }

    std::string out;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (k) out.push_back(' ');
        out += kept[k];
    }
    return CleanTextAccess::make(std::move(out));
}

}  // namespace mmstock
