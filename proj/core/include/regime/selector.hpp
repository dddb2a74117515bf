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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regime/corpus.hpp"
#include "regime/linear_model.hpp"
#include "regime/text_analysis.hpp"

namespace regime {

struct SelectedSentence {
    std::string text;
    std::size_t index = 0;
    std::size_t begin = 0;  // byte span inside the bridge body
    std::size_t end = 0;
    double confidence = 0;
};

/// Selection of the relation-bearing sentence of a bridge passage.
struct SelectionResult {
    std::optional<SelectedSentence> chosen;

    bool abstained() const noexcept { return !chosen.has_value(); }
    std::string_view text() const noexcept { return chosen ? std::string_view(chosen->text) : std::string_view{}; }
};

/// Index of the first sentence of the bridge containing the normalized hop-2
/// title, if any.
std::optional<std::size_t> oracle_label(const TextAnalyzer& analyzer, const Passage& bridge,
                                        std::string_view hop2_title);

struct AnnotatedPassage {
    Passage bridge;
    std::string question_id;
    std::string question;
    std::size_t gold_sentence_index = 0;
};

/// Reads annotations.jsonl ({"bridge_id","question_id","gold_sentence_index"})
/// and resolves ids against ds.
std::vector<AnnotatedPassage> load_annotations(const std::filesystem::path& path, const Dataset& ds);

struct SelectorTrainingSet {
    FeatureMatrix X{SentenceFeatures::kNames.size()};
    std::vector<int> y;
    std::vector<std::size_t> passage_of;  // row -> annotated passage index
};

/// One row per sentence: the annotated sentence is labeled 1, the rest 0.
/// Throws ValidationError when a gold index is out of range.
SelectorTrainingSet expand_annotations(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated);

std::vector<std::string> selector_feature_names();

LinearModel train_selector(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated,
                           const TrainConfig& cfg = {});

/// Scores every sentence and returns the most probable, lowest index on ties.
/// Abstains on an empty passage, or when the winning probability is below
/// abstain_threshold (0 disables).
SelectionResult select(const TextAnalyzer& analyzer, const Passage& bridge, std::string_view question,
                       const LinearModel& model, double abstain_threshold = 0.0);

/// Fraction of passages whose selected index equals the annotated index.
double selector_accuracy(const TextAnalyzer& analyzer, const LinearModel& model,
                         std::span<const AnnotatedPassage> annotated);

/// Same metric with each passage scored by a model trained on the other
/// contiguous passage folds.
double cross_fitted_selector_accuracy(const TextAnalyzer& analyzer, std::span<const AnnotatedPassage> annotated,
                                      std::size_t k = 5, const TrainConfig& cfg = {});

}  // namespace regime
