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

#include "regime/selector.hpp"

#include <fstream>

#include "regime/errors.hpp"

namespace regime {

std::optional<std::size_t> oracle_label(const TextAnalyzer& analyzer, const Passage& bridge,
                                        std::string_view hop2_title) {
    const auto title = normalize_text(hop2_title);
    if (title.empty()) return std::nullopt;
    const auto sentences = analyzer.split_sentences(bridge.body);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (normalize_text(sentences[i].text).find(title) != std::string::npos) return i;
    }
    return std::nullopt;
}

std::vector<AnnotatedPassage> load_annotations(const std::filesystem::path& path, const Dataset& ds) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open annotation file");
    std::vector<AnnotatedPassage> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            AnnotatedPassage a;
            const auto bridge_id = j.at("bridge_id").get<std::string>();
            a.question_id = j.at("question_id").get<std::string>();
            const auto idx = j.at("gold_sentence_index").get<long long>();
            if (idx < 0) throw ParseError(path.string(), lineno, "gold_sentence_index must be non-negative");
            a.gold_sentence_index = static_cast<std::size_t>(idx);
            auto it = ds.passages.find(bridge_id);
            if (it == ds.passages.end()) throw IntegrityError("annotation references unknown passage", {bridge_id});
            a.bridge = it->second;
            const Query* q = ds.find_query(a.question_id);
            if (q == nullptr) throw IntegrityError("annotation references unknown query", {a.question_id});
            a.question = q->question;
            out.push_back(std::move(a));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
    return out;
}

std::vector<std::string> selector_feature_names() {
    return {SentenceFeatures::kNames.begin(), SentenceFeatures::kNames.end()};
}

SelectorTrainingSet expand_annotations(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated) {
    SelectorTrainingSet set;
    for (std::size_t p = 0; p < annotated.size(); ++p) {
        const auto& a = annotated[p];
        const auto sentences = analyzer.split_sentences(a.bridge.body);
        if (a.gold_sentence_index >= sentences.size()) {
            throw ValidationError("annotation for passage \"" + a.bridge.id + "\" has gold_sentence_index " +
                                  std::to_string(a.gold_sentence_index) + " but only " +
                                  std::to_string(sentences.size()) + " sentences");
        }
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            const auto f = analyzer.sentence_features(sentences[i].text, a.question, i, sentences.size());
            set.X.add_row(f.to_vector());
            set.y.push_back(i == a.gold_sentence_index ? 1 : 0);
            set.passage_of.push_back(p);
        }
    }
    return set;
}

LinearModel train_selector(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated,
                           const TrainConfig& cfg) {
    auto set = expand_annotations(analyzer, annotated);
    return train(set.X, set.y, cfg, selector_feature_names());
}

SelectionResult select(const TextAnalyzer& analyzer, const Passage& bridge, std::string_view question,
                       const LinearModel& model, double abstain_threshold) {
    if (model.feature_names != selector_feature_names()) {
        throw ValidationError("selector model features do not match the sentence feature layout");
    }
    const auto sentences = analyzer.split_sentences(bridge.body);
    SelectionResult result;
    if (sentences.empty()) return result;

    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const auto f = analyzer.sentence_features(sentences[i].text, question, i, sentences.size());
        const double p = model.predict_proba(f.to_vector());
        if (p > best_p) {
            best_p = p;
            best = i;
        }
    }
    if (abstain_threshold > 0 && best_p < abstain_threshold) return result;
    const auto& s = sentences[best];
    result.chosen = SelectedSentence{s.text, best, s.begin, s.end, best_p};
    return result;
}

double selector_accuracy(const TextAnalyzer& analyzer, const LinearModel& model,
                         std::span<const AnnotatedPassage> annotated) {
    if (annotated.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& a : annotated) {
        const auto r = select(analyzer, a.bridge, a.question, model);
        if (r.chosen && r.chosen->index == a.gold_sentence_index) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(annotated.size());
}

double cross_fitted_selector_accuracy(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated,
                                      std::size_t k, const TrainConfig& cfg) {
    const auto folds = contiguous_folds(annotated.size(), k);
    std::size_t hits = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto [begin, end] = folds[f];
        std::vector<AnnotatedPassage> train_set;
        for (std::size_t i = 0; i < annotated.size(); ++i) {
            if (i < begin || i >= end) train_set.push_back(annotated[i]);
        }
        LinearModel m;
        try {
            m = train_selector(analyzer, train_set, cfg);
        } catch (const TrainingError& e) {
            throw TrainingError("fold " + std::to_string(f) + ": " + e.what());
        }
        for (std::size_t i = begin; i < end; ++i) {
            const auto r = select(analyzer, annotated[i].bridge, annotated[i].question, m);
            if (r.chosen && r.chosen->index == annotated[i].gold_sentence_index) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(annotated.size());
}

}  // namespace regime
