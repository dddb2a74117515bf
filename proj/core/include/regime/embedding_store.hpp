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

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace regime {

/// Which encoder head produced a vector: f_q for questions and query-side
/// texts, f_d for corpus passages.
enum class EncoderMode : std::uint8_t { query = 0, doc = 1 };

std::string_view to_string(EncoderMode mode);
EncoderMode parse_encoder_mode(std::string_view name);

using Vector = std::vector<double>;

/// Scales v to unit L2 norm in place. Throws NonFiniteValueError on NaN/inf
/// and ValidationError on a zero vector.
void normalize(Vector& v);

double dot(std::span<const double> a, std::span<const double> b);

/// Immutable map (text key, mode) -> unit-norm vector of a fixed dimension.
class VectorStore {
 public:
    using Key = std::pair<std::string, EncoderMode>;

    class Builder {
     public:
        explicit Builder(std::uint32_t dim);
        /// Starts from the entries of an existing store.
        explicit Builder(const VectorStore& base);

        /// Normalizes and inserts; replaces an existing entry with the same key.
        Builder& add(std::string key, EncoderMode mode, Vector values);
        /// Adds every entry of other; dimensions must agree.
        Builder& merge(const VectorStore& other);

        VectorStore build() &&;

     private:
        std::uint32_t dim_;
        std::map<Key, Vector> entries_;
    };

    VectorStore() = default;

    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(std::string_view key, EncoderMode mode) const;
    /// Throws MissingEmbeddingError naming key and mode.
    const Vector& at(std::string_view key, EncoderMode mode) const;
    const std::map<Key, Vector>& entries() const noexcept { return entries_; }

 private:
    VectorStore(std::uint32_t dim, std::map<Key, Vector> entries);

    std::uint32_t dim_ = 0;
    std::map<Key, Vector> entries_;
};

/// Binary vector file: "RGRV1", u32 LE dim, then records of
/// (u16 LE id length, UTF-8 id, u8 mode, dim x f32 LE).
VectorStore load_vectors(const std::filesystem::path& path);
/// Loads several files into one store; all must share a dimension.
VectorStore load_vectors(const std::vector<std::filesystem::path>& paths);
void save_vectors(const VectorStore& store, const std::filesystem::path& path);

/// Raw writer used for stores whose vectors are not yet normalized.
void write_vector_file(const std::filesystem::path& path, std::uint32_t dim,
                       const std::vector<std::pair<VectorStore::Key, Vector>>& records);

/// Inner product of the query vector (key, mode_q) with each candidate's
/// doc-mode vector. Inputs are unit norm, so this is cosine similarity.
std::vector<double> score(const VectorStore& store, std::string_view query_key, EncoderMode mode_q,
                          std::span<const std::string> candidate_keys);

}  // namespace regime
