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

#include "synthetic_corpus.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "regime/experiments.hpp"
#include "regime/text_key.hpp"

namespace regime::testing {

namespace {

constexpr std::array<const char*, 25> kSyllables{"al",  "bor", "cen", "dar", "el",  "fen", "gor", "hal", "ir",
                                                 "jas", "kel", "lor", "mar", "nor", "ov",  "pel", "quin", "ras",
                                                 "sel", "tor", "ul",  "vor", "wen", "yar", "zel"};

std::string capitalized(std::string s) {
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

// Distinct two-word proper name for every k.
std::string person_name(std::size_t k) {
    const auto b = kSyllables.size();
    std::string first = capitalized(std::string(kSyllables[k % b]) + kSyllables[(k / b) % b]);
    std::string last = capitalized(std::string(kSyllables[(k / (b * b)) % b]) + kSyllables[(k / (b * b * b)) % b] + "sk");
    return first + " " + last;
}

std::string place_name(std::size_t k, const char* suffix) {
    const auto b = kSyllables.size();
    return capitalized(std::string(kSyllables[k % b]) + kSyllables[(k / b) % b] + kSyllables[(k / (b * b)) % b]) +
           " " + suffix;
}

class VectorFactory {
 public:
    VectorFactory(std::uint32_t dim, std::uint64_t seed) : dim_(dim), rng_(seed) {}

    Vector unit() {
        Vector v(dim_);
        double norm = 0;
        do {
            norm = 0;
            for (auto& x : v) {
                x = gauss_(rng_);
                norm += x * x;
            }
        } while (norm == 0);
        for (auto& x : v) x /= std::sqrt(norm);
        return v;
    }

    // sum of weighted parts plus a fresh noise direction
    Vector mix(std::initializer_list<std::pair<double, const Vector*>> parts, double noise) {
        Vector out(dim_, 0.0);
        for (const auto& [w, v] : parts) {
            for (std::size_t i = 0; i < dim_; ++i) out[i] += w * (*v)[i];
        }
        const auto n = unit();
        for (std::size_t i = 0; i < dim_; ++i) out[i] += noise * n[i];
        return out;
    }

 private:
    std::uint32_t dim_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
};

struct BridgeText {
    std::vector<std::string> sentences;
    std::size_t relation_index = 0;
};

std::string join(const std::vector<std::string>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticCorpusOptions& opts) {
    if (opts.pool_size < 8) throw std::invalid_argument("pool_size must be at least 8");
    SyntheticCorpus c;
    c.ds.name = opts.name;
    VectorFactory vf(opts.dim, opts.seed);
    std::mt19937_64 layout(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const TextAnalyzer analyzer;
    VectorStore::Builder store(opts.dim);
    const double nz = opts.noise;

    std::size_t name_counter = 0;
    for (std::size_t i = 0; i < opts.n_queries; ++i) {
        const bool b_dom = unif(layout) < opts.b_fraction;
        const std::size_t rel_index = 1 + (layout() % 2);
        c.b_dominant.push_back(b_dom);

        const auto idx = std::to_string(i);
        const std::string bridge_name = person_name(1000 + 7 * name_counter++);
        const std::string gold_name = place_name(40 + 11 * name_counter++, b_dom ? "Studio" : "Hall");
        const std::string other_name = person_name(5000 + 13 * name_counter++);
        const auto e_bridge = vf.unit();
        const auto e_gold = vf.unit();
        const auto e_other = vf.unit();

        Query q;
        q.id = "q" + std::string(4 - std::min<std::size_t>(4, idx.size()), '0') + idx;
        q.bridge_id = "b" + idx;
        q.gold_id = "g" + idx;
        q.hop2_title = gold_name;

        BridgeText bt;
        bt.relation_index = rel_index;
        std::string relation, filler;
        if (b_dom) {
            q.qtype = i % 2 ? QueryType::inference : QueryType::compositional;
            q.question = "Who directed the studio that hired " + bridge_name + "?";
            relation = bridge_name + " was a member of " + gold_name + " for many years.";
            filler = "The painter retired in " + std::to_string(1800 + i) + " to a quiet farm near the coast.";
            bt.sentences = {bridge_name + " is a painter from the northern valley."};
        } else {
            q.qtype = i % 2 ? QueryType::bridge_comparison : QueryType::comparison;
            q.question = "Which is older, " + gold_name + " or " + bridge_name + "?";
            relation = bridge_name + " was founded by " + other_name + " in the spring.";
            filler = "The venue closed during the winter of " + std::to_string(1800 + i) + ".";
            bt.sentences = {bridge_name + " is a concert venue in the old harbor."};
        }
        if (rel_index == 1) {
            bt.sentences.push_back(relation);
            bt.sentences.push_back(filler);
        } else {
            bt.sentences.push_back(filler);
            bt.sentences.push_back(relation);
        }

        Passage bridge{q.bridge_id, bridge_name, join(bt.sentences)};
        Passage gold{q.gold_id, gold_name, gold_name + " is a building in the river district."};
        c.ds.passages[bridge.id] = bridge;
        c.ds.passages[gold.id] = gold;

        // Question and gold.
        if (b_dom) {
            store.add(question_key(q.id), EncoderMode::query, vf.mix({{1.0, &e_bridge}}, nz));
        } else {
            store.add(question_key(q.id), EncoderMode::query, vf.mix({{1.0, &e_gold}, {0.5, &e_bridge}}, nz));
        }
        store.add(passage_key(gold.id), EncoderMode::doc, vf.mix({{1.0, &e_gold}}, 0.3));

        // Bridge as a query, its sentences and its minus-variants.
        // The full bridge is its relation sentence plus more of the bridge entity,
        // so the two rank the pool alike.
        const auto& focus = b_dom ? e_gold : e_other;
        const auto rel_vec = vf.mix({{1.0, &focus}, {0.3, &e_bridge}}, nz);
        store.add(passage_key(bridge.id), EncoderMode::query, vf.mix({{1.0, &rel_vec}, {0.4, &e_bridge}}, 0.0));
        const auto sentences = analyzer.split_sentences(bridge.body);
        if (sentences.size() != bt.sentences.size()) throw std::logic_error("unexpected sentence split in " + bridge.id);
        for (std::size_t s = 0; s < sentences.size(); ++s) {
            const bool is_rel = s == rel_index;
            const auto sentence_vec = is_rel ? rel_vec : vf.mix({{0.6, &e_bridge}}, nz);
            store.add(text_key(sentences[s].text), EncoderMode::query, sentence_vec);
            const auto minus = remove_span(bridge.body, sentences[s].begin, sentences[s].end);
            const auto minus_vec = is_rel ? vf.mix({{1.0, &e_bridge}}, nz)
                                          : vf.mix({{1.0, &rel_vec}, {0.4, &e_bridge}}, 0.1);
            store.add(text_key(minus), EncoderMode::query, minus_vec);
        }

        // Pool: gold, distractors close to the question-side entity, and random ones.
        q.pool_ids.push_back(gold.id);
        const std::size_t hard = 4;
        for (std::size_t d = 1; d < opts.pool_size; ++d) {
            Passage p;
            p.id = "d" + idx + "_" + std::to_string(d);
            p.title = place_name(9000 + 17 * name_counter++, "Archive");
            p.body = p.title + " holds records from the period.";
            Vector v;
            if (d <= hard) {
                v = vf.mix({{1.0, b_dom ? &e_bridge : &e_other}}, 0.5);
            } else {
                v = vf.unit();
            }
            store.add(passage_key(p.id), EncoderMode::doc, std::move(v));
            q.pool_ids.push_back(p.id);
            c.ds.passages[p.id] = std::move(p);
        }
        // Deterministic shuffle so the gold is not always first.
        std::shuffle(q.pool_ids.begin(), q.pool_ids.end(), layout);

        c.annotations.push_back({bridge, q.id, q.question, rel_index});
        c.ds.queries.push_back(std::move(q));
    }
    validate(c.ds);
    c.store = std::move(store).build();
    return c;
}

SyntheticFiles write_synthetic_corpus(const SyntheticCorpus& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    SyntheticFiles f{{dir / "queries.jsonl", dir / "passages.jsonl"}, dir / "vectors.rgv", dir / "annotations.jsonl"};
    save_dataset(c.ds, f.dataset);
    save_vectors(c.store, f.vectors);
    std::ofstream out(f.annotations);
    for (const auto& a : c.annotations) {
        out << nlohmann::json{{"bridge_id", a.bridge.id},
                              {"question_id", a.question_id},
                              {"gold_sentence_index", a.gold_sentence_index}}
                   .dump()
            << '\n';
    }
    return f;
}

std::filesystem::path make_temp_dir(const std::string& prefix) {
    static std::atomic<unsigned> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    auto dir = std::filesystem::temp_directory_path() /
               (prefix + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace regime::testing
