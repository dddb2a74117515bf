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

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "regime/corpus.hpp"

namespace regime {

struct Token {
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source
    std::size_t end = 0;
    bool sentence_initial = false;
};

struct TokenizedText {
    std::string source;
    std::vector<Token> tokens;
};

struct Sentence {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// A maximal run of capitalized tokens treated as one named entity.
struct EntitySpan {
    std::string surface;
    std::size_t first_token = 0;
    std::size_t last_token = 0;
};

/// Word lists driving the surface heuristics. Entries are lowercase.
struct Lexicons {
    std::set<std::string> comparison_words;
    std::set<std::string> yes_no_verbs;
    std::set<std::string> relation_verbs;
    std::set<std::string> stopwords;      // never start an entity span
    std::set<std::string> abbreviations;  // without trailing period, e.g. "mr", "u.s"

    static Lexicons defaults();
    /// Reads <dir>/{comparison_words,yes_no_verbs,relation_verbs,stopwords,abbreviations}.txt;
    /// lists whose file is absent keep their defaults.
    static Lexicons from_directory(const std::filesystem::path& dir);
};

/// One term per line; blank lines and lines starting with '#' are skipped.
std::set<std::string> load_lexicon(const std::filesystem::path& path);

/// ASCII-lowercases, collapses whitespace runs to one space and trims.
std::string normalize_text(std::string_view text);

struct RouterFeatures {
    double q_comparison_word = 0;
    double q_ynstart = 0;
    double q_entity_count = 0;
    double b_new_entity_count = 0;
    double b_rel_frac = 0;

    static constexpr std::array<std::string_view, 5> kNames{
        "q_comparison_word", "q_ynstart", "q_entity_count", "b_new_entity_count", "b_rel_frac"};
    std::vector<double> to_vector() const;
};

struct SentenceFeatures {
    double new_entity_count = 0;
    double has_relation_verb = 0;
    double position_frac = 0;
    double length_tokens = 0;
    double ne_density = 0;

    static constexpr std::array<std::string_view, 5> kNames{
        "new_entity_count", "has_relation_verb", "position_frac", "length_tokens", "ne_density"};
    std::vector<double> to_vector() const;
};

enum class Regime { q_dominant, b_dominant, uncovered };

std::string_view to_string(Regime regime);

struct PredicateAssignment {
    bool p1 = false;
    bool p2 = false;
    Regime regime = Regime::uncovered;
};

/// P1 -> Q-dominant; not P1 and P2 -> B-dominant; neither -> uncovered.
PredicateAssignment assign_regime(bool p1, bool p2);

class TextAnalyzer {
 public:
    explicit TextAnalyzer(Lexicons lexicons = Lexicons::defaults());

    const Lexicons& lexicons() const noexcept { return lex_; }

    /// Splits on '.', '?' or '!' followed by whitespace and a capital letter, or
    /// by end of text. Abbreviations and single-letter initials do not end a
    /// sentence. Sentences partition the non-whitespace characters of text.
    std::vector<Sentence> split_sentences(std::string_view text) const;

    /// Word tokens separated by whitespace and ASCII punctuation. Apostrophes,
    /// hyphens and periods between two word characters stay inside a token.
    TokenizedText tokenize(std::string_view text) const;

    std::vector<EntitySpan> proper_noun_spans(const TokenizedText& t) const;

    /// Distinct normalized entity surfaces of text.
    std::set<std::string> entities(std::string_view text) const;

    bool p1_proxy(const Query& q) const;
    bool p2_proxy(const Passage& bridge, std::string_view hop2_title) const;
    PredicateAssignment predicates(const Query& q, const Passage& bridge) const;

    /// b_rel is the selected sentence, or empty when the selector abstained.
    RouterFeatures router_features(const Query& q, std::string_view b_rel, const Passage& bridge) const;

    SentenceFeatures sentence_features(std::string_view sentence, std::string_view question, std::size_t index,
                                       std::size_t total) const;

 private:
    bool is_abbreviation(std::string_view text, std::size_t period_pos) const;

    Lexicons lex_;
};

}  // namespace regime
