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
#include <random>
#include <string>

namespace regime::testing {

// Appends the UTF-8 encoding of a code point.
inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Valid UTF-8 biased toward the characters the analyzers care about:
// capitals, sentence terminators, quotes, whitespace runs and multibyte text.
inline std::string random_utf8(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string specials = ".?!,;:'\"()-[] \t\n";
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<int> kind(0, 9);
    const auto len = len_dist(rng);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        switch (kind(rng)) {
            case 0:
            case 1:
                out.push_back(static_cast<char>('A' + rng() % 26));
                break;
            case 2:
            case 3:
            case 4:
                out.push_back(static_cast<char>('a' + rng() % 26));
                break;
            case 5:
            case 6:
                out.push_back(specials[rng() % specials.size()]);
                break;
            case 7:
                append_utf8(out, static_cast<std::uint32_t>(0x80 + rng() % (0x800 - 0x80)));
                break;
            case 8: {
                auto cp = static_cast<std::uint32_t>(0x800 + rng() % (0x10000 - 0x800));
                if (cp >= 0xD800 && cp <= 0xDFFF) cp = 0x4E2D;
                append_utf8(out, cp);
                break;
            }
            default:
                if (rng() % 2) append_utf8(out, static_cast<std::uint32_t>(0x10000 + rng() % 0x100000));
                else out.push_back(static_cast<char>(rng() % 0x80));
                break;
        }
    }
    return out;
}

}  // namespace regime::testing
