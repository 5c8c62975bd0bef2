// Copyright 2026 the hibow authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>

namespace hibow {

using LeafId = std::uint32_t;

/// Scored leaf hit. island_id is set by group_islands.
struct MatchResult {
    LeafId leaf_id = 0;
    double score = 0.0;
    std::optional<std::uint32_t> island_id;

    bool operator==(const MatchResult&) const = default;
};

/// Canonical result ordering: score descending, leaf id ascending.
inline bool match_order(const MatchResult& a, const MatchResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.leaf_id < b.leaf_id;
}

/// Returns true for leaves that must not be reported (e.g. temporally
/// adjacent frames in the loop-closure protocol).
using LeafPredicate = std::function<bool(LeafId)>;

}  // namespace hibow
