// Copyright 2026 The regime-router Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#include "regime/text_analysis.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "regime/errors.hpp"

namespace regime {

namespace {

// ASCII-only character classes; bytes >= 0x80 (UTF-8 sequences) count as word characters.
bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_upper(unsigned char c) { return c >= 'A' && c <= 'Z'; }
bool is_punct(unsigned char c) {
    return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}
bool is_word(unsigned char c) { return c >= 0x80 || (!is_space(c) && !is_punct(c) && c >= 0x20 && c != 0x7F); }
bool is_terminator(unsigned char c) { return c == '.' || c == '?' || c == '!'; }
bool is_closer(unsigned char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_connector(unsigned char c) { return c == '\'' || c == '-' || c == '.'; }

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (is_upper(static_cast<unsigned char>(c))) c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::set<std::string> make_set(std::initializer_list<const char*> words) {
    std::set<std::string> out;
    for (const char* w : words) out.emplace(w);
    return out;
}

}  // namespace

Lexicons Lexicons::defaults() {
    Lexicons lex;
    lex.comparison_words = make_set({"differ", "differs", "different", "same", "versus", "vs", "whereas", "earlier",
                                     "later", "more", "less", "longer", "shorter", "older", "younger", "both", "or"});
    lex.yes_no_verbs = make_set({"did", "was", "were", "do", "does", "is", "are", "has", "had"});
    lex.relation_verbs = make_set({"directed", "born", "founded", "married", "wrote", "created", "located", "member",
                                   "died", "won", "released", "published", "son", "daughter", "wife", "husband",
                                   "capital", "part"});
    lex.stopwords = make_set({"the", "a", "an", "which", "who", "what", "when", "where", "why", "how", "whose", "whom",
                              "is", "are", "was", "were", "did", "do", "does", "has", "had", "in", "on", "at", "of",
                              "and", "or", "for", "to", "his", "her", "its", "their", "he", "she", "it", "they",
                              "this", "that", "these", "those", "i", "there", "after", "before", "during", "by",
                              "from", "with", "as"});
    lex.abbreviations = make_set({"mr", "mrs", "ms", "dr", "prof", "st", "jr", "sr", "u.s", "u.k", "u.n", "inc",
                                  "ltd", "co", "corp", "vs", "etc", "e.g", "i.e", "no", "mt", "ft", "gen", "col",
                                  "lt", "sgt", "capt", "rev", "hon", "jan", "feb", "mar", "apr", "jun", "jul", "aug",
                                  "sep", "sept", "oct", "nov", "dec", "a.m", "p.m", "ph.d", "b.c", "a.d", "approx",
                                  "dept", "est"});
    return lex;
}

std::set<std::string> load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open lexicon file");
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto term = normalize_text(line);
        if (term.empty() || term.front() == '#') continue;
        out.insert(std::move(term));
    }
    return out;
}

Lexicons Lexicons::from_directory(const std::filesystem::path& dir) {
    Lexicons lex = defaults();
    const std::pair<const char*, std::set<std::string>*> files[] = {
        {"comparison_words.txt", &lex.comparison_words}, {"yes_no_verbs.txt", &lex.yes_no_verbs},
        {"relation_verbs.txt", &lex.relation_verbs},     {"stopwords.txt", &lex.stopwords},
        {"abbreviations.txt", &lex.abbreviations},
    };
    for (const auto& [name, target] : files) {
        auto path = dir / name;
        if (std::filesystem::exists(path)) *target = load_lexicon(path);
    }
    return lex;
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(is_upper(c) ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    }
    return out;
}

std::vector<double> RouterFeatures::to_vector() const {
    return {q_comparison_word, q_ynstart, q_entity_count, b_new_entity_count, b_rel_frac};
}

std::vector<double> SentenceFeatures::to_vector() const {
    return {new_entity_count, has_relation_verb, position_frac, length_tokens, ne_density};
}

std::string_view to_string(Regime regime) {
    switch (regime) {
        case Regime::q_dominant: return "Q_dominant";
        case Regime::b_dominant: return "B_dominant";
        case Regime::uncovered: return "uncovered";
    }
    return "uncovered";
}

PredicateAssignment assign_regime(bool p1, bool p2) {
    Regime r = p1 ? Regime::q_dominant : (p2 ? Regime::b_dominant : Regime::uncovered);
    return {p1, p2, r};
}

TextAnalyzer::TextAnalyzer(Lexicons lexicons) : lex_(std::move(lexicons)) {}

bool TextAnalyzer::is_abbreviation(std::string_view text, std::size_t period_pos) const {
    std::size_t start = period_pos;
    while (start > 0 && !is_space(static_cast<unsigned char>(text[start - 1]))) --start;
    while (start < period_pos && !is_word(static_cast<unsigned char>(text[start]))) ++start;
    if (start == period_pos) return false;
    std::string_view word = text.substr(start, period_pos - start);
    if (word.size() == 1 && is_upper(static_cast<unsigned char>(word[0]))) return true;  // initial
    return lex_.abbreviations.contains(lower(word));
}

std::vector<Sentence> TextAnalyzer::split_sentences(std::string_view text) const {
    std::vector<Sentence> out;
    const std::size_t n = text.size();
    auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    auto emit = [&](std::size_t begin, std::size_t end) {
        while (end > begin && is_space(at(end - 1))) --end;
        if (end > begin) out.push_back({std::string(text.substr(begin, end - begin)), begin, end});
    };

    std::size_t start = std::string_view::npos;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned char c = at(i);
        if (start == std::string_view::npos) {
            if (is_space(c)) continue;
            start = i;
        }
        if (!is_terminator(c)) continue;

        std::size_t j = i + 1;
        while (j < n && is_terminator(at(j))) ++j;
        while (j < n && is_closer(at(j))) ++j;
        std::size_t k = j;
        while (k < n && is_space(at(k))) ++k;

        bool boundary = k == n || (k > j && is_upper(at(k)));
        if (boundary && k < n && c == '.' && j == i + 1 && is_abbreviation(text, i)) boundary = false;
        if (boundary) {
            emit(start, j);
            start = std::string_view::npos;
            i = j - 1;
        }
    }
    if (start != std::string_view::npos) emit(start, n);
    return out;
}

TokenizedText TextAnalyzer::tokenize(std::string_view text) const {
    TokenizedText out;
    out.source = std::string(text);
    const std::size_t n = text.size();
    auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };

    std::size_t i = 0;
    while (i < n) {
        if (!is_word(at(i))) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n) {
            if (is_word(at(j))) {
                ++j;
            } else if (is_connector(at(j)) && j + 1 < n && is_word(at(j + 1))) {
                j += 2;
            } else {
                break;
            }
        }
        out.tokens.push_back({std::string(text.substr(i, j - i)), i, j, false});
        i = j;
    }

    auto sentences = split_sentences(text);
    std::size_t s = 0;
    std::size_t last_sentence = std::string_view::npos;
    for (auto& tok : out.tokens) {
        while (s < sentences.size() && sentences[s].end <= tok.begin) ++s;
        if (s < sentences.size() && tok.begin >= sentences[s].begin && s != last_sentence) {
            tok.sentence_initial = true;
            last_sentence = s;
        }
    }
    return out;
}

std::vector<EntitySpan> TextAnalyzer::proper_noun_spans(const TokenizedText& t) const {
    const auto& toks = t.tokens;
    auto capitalized = [&](std::size_t i) { return is_upper(static_cast<unsigned char>(toks[i].text[0])); };
    auto whitespace_gap = [&](std::size_t i) {
        for (std::size_t p = toks[i - 1].end; p < toks[i].begin; ++p) {
            if (!is_space(static_cast<unsigned char>(t.source[p]))) return false;
        }
        return true;
    };

    std::set<std::string> capitalized_mid_sentence;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (capitalized(i) && !toks[i].sentence_initial) capitalized_mid_sentence.insert(toks[i].text);
    }

    std::vector<EntitySpan> spans;
    std::size_t i = 0;
    while (i < toks.size()) {
        if (!capitalized(i)) {
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end + 1 < toks.size() && capitalized(end + 1) && !toks[end + 1].sentence_initial && whitespace_gap(end + 1)) {
            ++end;
        }
        std::size_t first = i;
        while (first <= end && lex_.stopwords.contains(lower(toks[first].text))) ++first;
        if (first <= end) {
            const bool lone_initial = toks[first].sentence_initial && first == end;
            if (!lone_initial || capitalized_mid_sentence.contains(toks[first].text)) {
                spans.push_back({t.source.substr(toks[first].begin, toks[end].end - toks[first].begin), first, end});
            }
        }
        i = end + 1;
    }
    return spans;
}

std::set<std::string> TextAnalyzer::entities(std::string_view text) const {
    std::set<std::string> out;
    for (const auto& span : proper_noun_spans(tokenize(text))) out.insert(normalize_text(span.surface));
    return out;
}

bool TextAnalyzer::p1_proxy(const Query& q) const {
    const auto title = normalize_text(q.hop2_title);
    if (title.empty()) return false;
    return normalize_text(q.question).find(title) != std::string::npos;
}

bool TextAnalyzer::p2_proxy(const Passage& bridge, std::string_view hop2_title) const {
    const auto title = normalize_text(hop2_title);
    if (title.empty()) return false;
    for (const auto& s : split_sentences(bridge.body)) {
        if (normalize_text(s.text).find(title) != std::string::npos) return true;
    }
    return false;
}

PredicateAssignment TextAnalyzer::predicates(const Query& q, const Passage& bridge) const {
    return assign_regime(p1_proxy(q), p2_proxy(bridge, q.hop2_title));
}

RouterFeatures TextAnalyzer::router_features(const Query& q, std::string_view b_rel, const Passage& bridge) const {
    RouterFeatures f;
    const auto q_tokens = tokenize(q.question);
    for (const auto& tok : q_tokens.tokens) {
        if (lex_.comparison_words.contains(lower(tok.text))) {
            f.q_comparison_word = 1;
            break;
        }
    }
    if (!q_tokens.tokens.empty() && lex_.yes_no_verbs.contains(lower(q_tokens.tokens.front().text))) f.q_ynstart = 1;

    std::set<std::string> q_entities;
    for (const auto& span : proper_noun_spans(q_tokens)) q_entities.insert(normalize_text(span.surface));
    f.q_entity_count = static_cast<double>(q_entities.size());

    const auto rel_tokens = tokenize(b_rel);
    if (!rel_tokens.tokens.empty()) {
        std::size_t fresh = 0;
        for (const auto& e : entities(b_rel)) fresh += q_entities.contains(e) ? 0 : 1;
        f.b_new_entity_count = static_cast<double>(fresh);
        const auto body_len = tokenize(bridge.body).tokens.size();
        if (body_len > 0) {
            f.b_rel_frac = std::min(1.0, static_cast<double>(rel_tokens.tokens.size()) / static_cast<double>(body_len));
        }
    }
    return f;
}

SentenceFeatures TextAnalyzer::sentence_features(std::string_view sentence, std::string_view question,
                                                 std::size_t index, std::size_t total) const {
    SentenceFeatures f;
    total = std::max<std::size_t>(total, 1);
    index = std::min(index, total - 1);
    f.position_frac = static_cast<double>(index) / static_cast<double>(std::max<std::size_t>(total - 1, 1));

    const auto toks = tokenize(sentence);
    f.length_tokens = static_cast<double>(toks.tokens.size());
    for (const auto& tok : toks.tokens) {
        if (lex_.relation_verbs.contains(lower(tok.text))) {
            f.has_relation_verb = 1;
            break;
        }
    }

    const auto spans = proper_noun_spans(toks);
    std::size_t entity_tokens = 0;
    std::set<std::string> sent_entities;
    for (const auto& span : spans) {
        entity_tokens += span.last_token - span.first_token + 1;
        sent_entities.insert(normalize_text(span.surface));
    }
    if (!toks.tokens.empty()) {
        f.ne_density = static_cast<double>(entity_tokens) / static_cast<double>(toks.tokens.size());
    }
    const auto q_entities = entities(question);
    std::size_t fresh = 0;
    for (const auto& e : sent_entities) fresh += q_entities.contains(e) ? 0 : 1;
    f.new_entity_count = static_cast<double>(fresh);
    return f;
}

}  // namespace regime
