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

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "regime/embed_provider.hpp"

namespace regime::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kParseError = 2,      // malformed input files and bad command lines
    kIntegrityError = 3,  // dangling or missing ids
    kConfigError = 4,
    kMissingEmbedding = 5,
    kProviderError = 6,
    kTrainingError = 7,
};

/// Hooks the tests replace.
struct Environment {
    std::shared_ptr<EmbedTransport> transport;  // null: HTTP
};

/// Names accepted by the experiment subcommand.
const std::vector<std::string>& experiment_names();

/// Runs one command line (without the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env = {});

}  // namespace regime::cli
