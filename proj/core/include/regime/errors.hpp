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
#include <stdexcept>
#include <string>
#include <vector>

namespace regime {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. line is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
    ParseError(std::string file, std::size_t line, const std::string& what);

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

 private:
    std::string file_;
    std::size_t line_;
};

/// A reference (passage id, query id) that does not resolve.
class IntegrityError : public Error {
 public:
    IntegrityError(const std::string& what, std::vector<std::string> missing_ids);

    const std::vector<std::string>& missing_ids() const noexcept { return missing_; }

 private:
    std::vector<std::string> missing_;
};

class ValidationError : public Error {
 public:
    using Error::Error;
};

class FormatError : public Error {
 public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
    using Error::Error;
};

class NonFiniteValueError : public Error {
 public:
    using Error::Error;
};

/// One or more (text key, mode) pairs have no vector in the store.
class MissingEmbeddingError : public Error {
 public:
    explicit MissingEmbeddingError(std::vector<std::string> missing);

    /// Entries formatted as "<key> (<mode>)".
    const std::vector<std::string>& missing() const noexcept { return missing_; }

 private:
    std::vector<std::string> missing_;
};

class TrainingError : public Error {
 public:
    using Error::Error;
};

class NonConvergenceError : public TrainingError {
 public:
    NonConvergenceError(int iterations, double gradient_norm);

    double gradient_norm() const noexcept { return gradient_norm_; }

 private:
    double gradient_norm_;
};

class TransportError : public Error {
 public:
    using Error::Error;
};

/// The embedding provider answered with an error payload; what() carries it verbatim.
class ProviderError : public Error {
 public:
    ProviderError(int status, std::string body);

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

 private:
    int status_;
    std::string body_;
};

class ConfigError : public Error {
 public:
    using Error::Error;
};

}  // namespace regime
