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

#include <string>
#include <string_view>

namespace regime {

// Keys under which texts are stored in a VectorStore. Questions and passages are
// addressed by dataset id; derived texts (selected sentences, knockout variants)
// by content hash so that the same text always maps to the same vector.
std::string question_key(std::string_view query_id);
std::string passage_key(std::string_view passage_id);
std::string text_key(std::string_view text);

/// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

}  // namespace regime
