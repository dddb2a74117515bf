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

#include "regime/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "regime/errors.hpp"

namespace regime {

namespace {

constexpr char kMagic[5] = {'R', 'G', 'R', 'V', '1'};

static_assert(std::endian::native == std::endian::little, "vector files are read with native little-endian loads");

template <typename T>
void write_le(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

std::string describe(std::string_view key, EncoderMode mode) {
    return std::string(key) + " (" + std::string(to_string(mode)) + ")";
}

}  // namespace

std::string_view to_string(EncoderMode mode) { return mode == EncoderMode::query ? "query" : "doc"; }

EncoderMode parse_encoder_mode(std::string_view name) {
    if (name == "query") return EncoderMode::query;
    if (name == "doc" || name == "passage") return EncoderMode::doc;
    throw ValidationError("unknown encoder mode \"" + std::string(name) + "\"");
}

void normalize(Vector& v) {
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw NonFiniteValueError("vector contains a non-finite value");
        sq += x * x;
    }
    if (sq == 0.0) throw ValidationError("cannot normalize a zero vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionMismatchError("dot product of vectors with different dimensions");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

VectorStore::Builder::Builder(std::uint32_t dim) : dim_(dim) {
    if (dim == 0) throw ValidationError("vector dimension must be positive");
}

VectorStore::Builder::Builder(const VectorStore& base) : dim_(base.dim()), entries_(base.entries()) {
    if (dim_ == 0) throw ValidationError("vector dimension must be positive");
}

VectorStore::Builder& VectorStore::Builder::add(std::string key, EncoderMode mode, Vector values) {
    if (values.size() != dim_) {
        throw DimensionMismatchError("vector for " + describe(key, mode) + " has dimension " +
                                     std::to_string(values.size()) + ", store dimension is " +
                                     std::to_string(dim_));
    }
    normalize(values);
    entries_[{std::move(key), mode}] = std::move(values);
    return *this;
}

VectorStore::Builder& VectorStore::Builder::merge(const VectorStore& other) {
    if (other.size() == 0) return *this;
    if (other.dim() != dim_) {
        throw DimensionMismatchError("cannot merge stores of dimension " + std::to_string(other.dim()) + " and " +
                                     std::to_string(dim_));
    }
    for (const auto& [key, v] : other.entries()) entries_[key] = v;
    return *this;
}

VectorStore VectorStore::Builder::build() && { return VectorStore(dim_, std::move(entries_)); }

VectorStore::VectorStore(std::uint32_t dim, std::map<Key, Vector> entries) : dim_(dim), entries_(std::move(entries)) {}

bool VectorStore::contains(std::string_view key, EncoderMode mode) const {
    return entries_.contains(Key{std::string(key), mode});
}

const Vector& VectorStore::at(std::string_view key, EncoderMode mode) const {
    auto it = entries_.find(Key{std::string(key), mode});
    if (it == entries_.end()) throw MissingEmbeddingError({describe(key, mode)});
    return it->second;
}

void write_vector_file(const std::filesystem::path& path, std::uint32_t dim,
                       const std::vector<std::pair<VectorStore::Key, Vector>>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open vector file for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, dim);
    for (const auto& [key, values] : records) {
        const auto& [id, mode] = key;
        if (id.size() > 0xFFFF) throw FormatError("text id longer than 65535 bytes: " + id.substr(0, 64));
        if (values.size() != dim) throw DimensionMismatchError("record " + describe(id, mode) + " has wrong dimension");
        write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        write_le<std::uint8_t>(out, static_cast<std::uint8_t>(mode));
        for (double x : values) write_le<float>(out, static_cast<float>(x));
    }
    if (!out) throw Error("failed writing vector file: " + path.string());
}

void save_vectors(const VectorStore& store, const std::filesystem::path& path) {
    std::vector<std::pair<VectorStore::Key, Vector>> records(store.entries().begin(), store.entries().end());
    write_vector_file(path, store.dim(), records);
}

VectorStore load_vectors(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open vector file: " + path.string());
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw FormatError(path.string() + ": bad magic, expected RGRV1");
    }
    std::uint32_t dim = 0;
    if (!read_le(in, dim) || dim == 0) throw FormatError(path.string() + ": missing or zero dimension");

    VectorStore::Builder builder(dim);
    std::vector<float> raw(dim);
    std::size_t record = 0;
    while (true) {
        std::uint16_t id_len = 0;
        if (!read_le(in, id_len)) {
            if (in.eof() && in.gcount() == 0) break;
            throw FormatError(path.string() + ": truncated record header at record " + std::to_string(record));
        }
        std::string id(id_len, '\0');
        std::uint8_t mode_byte = 0;
        if (!in.read(id.data(), id_len) || !read_le(in, mode_byte)) {
            throw FormatError(path.string() + ": truncated record " + std::to_string(record));
        }
        if (mode_byte > 1) throw FormatError(path.string() + ": invalid mode byte in record " + std::to_string(record));
        if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(dim * sizeof(float)))) {
            throw FormatError(path.string() + ": truncated vector in record " + std::to_string(record));
        }
        Vector v(raw.begin(), raw.end());
        builder.add(std::move(id), static_cast<EncoderMode>(mode_byte), std::move(v));
        ++record;
    }
    return std::move(builder).build();
}

VectorStore load_vectors(const std::vector<std::filesystem::path>& paths) {
    if (paths.empty()) throw ValidationError("no vector files given");
    VectorStore first = load_vectors(paths.front());
    if (paths.size() == 1) return first;
    VectorStore::Builder builder(first);
    for (std::size_t i = 1; i < paths.size(); ++i) builder.merge(load_vectors(paths[i]));
    return std::move(builder).build();
}

std::vector<double> score(const VectorStore& store, std::string_view query_key, EncoderMode mode_q,
                          std::span<const std::string> candidate_keys) {
    std::vector<std::string> missing;
    if (!store.contains(query_key, mode_q)) missing.push_back(describe(query_key, mode_q));
    for (const auto& c : candidate_keys) {
        if (!store.contains(c, EncoderMode::doc)) missing.push_back(describe(c, EncoderMode::doc));
    }
    if (!missing.empty()) throw MissingEmbeddingError(std::move(missing));

    const Vector& q = store.at(query_key, mode_q);
    std::vector<double> out;
    out.reserve(candidate_keys.size());
    for (const auto& c : candidate_keys) out.push_back(dot(q, store.at(c, EncoderMode::doc)));
    return out;
}

}  // namespace regime
