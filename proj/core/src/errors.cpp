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

#include "regime/errors.hpp"

#include <sstream>

namespace regime {

namespace {

std::string join(const std::vector<std::string>& items, std::size_t limit = 20) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
        if (i) out << ", ";
        out << '"' << items[i] << '"';
    }
    if (items.size() > limit) out << ", ... (" << items.size() - limit << " more)";
    return out.str();
}

std::string location(const std::string& file, std::size_t line) {
    std::ostringstream out;
    out << file;
    if (line > 0) out << ":" << line;
    return out.str();
}

}  // namespace

ParseError::ParseError(std::string file, std::size_t line, const std::string& what)
    : Error(location(file, line) + ": " + what), file_(std::move(file)), line_(line) {}

IntegrityError::IntegrityError(const std::string& what, std::vector<std::string> missing_ids)
    : Error(what + ": " + join(missing_ids)), missing_(std::move(missing_ids)) {}

MissingEmbeddingError::MissingEmbeddingError(std::vector<std::string> missing)
    : Error("missing embeddings: " + join(missing)), missing_(std::move(missing)) {}

NonConvergenceError::NonConvergenceError(int iterations, double gradient_norm)
    : TrainingError("no convergence after " + std::to_string(iterations) +
                    " iterations; final gradient norm " + std::to_string(gradient_norm)),
      gradient_norm_(gradient_norm) {}

ProviderError::ProviderError(int status, std::string body)
    : Error("embedding provider error (HTTP " + std::to_string(status) + "): " + body),
      status_(status),
      body_(std::move(body)) {}

}  // namespace regime
