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

#include "hibow/flat_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace hibow {

void FlatIndex::insert(LeafId id, SparseHistogram h) {
    if (slot_by_id_.contains(id)) {
        throw std::invalid_argument("duplicate leaf id");
    }
    const auto slot = static_cast<std::uint32_t>(ids_.size());
    index_.add(slot, h);
    slot_by_id_.emplace(id, slot);
    ids_.push_back(id);
    hists_.push_back(std::move(h));
}

std::vector<MatchResult> FlatIndex::query(const SparseHistogram& q, double tau,
                                          const LeafPredicate* exclude,
                                          ScoreScratch* scratch,
                                          std::uint64_t* ops) const {
    ScoreScratch local;
    ScoreScratch& s = scratch ? *scratch : local;
    std::vector<ScoredSlot> scored;
    score_all(index_, q, s, scored, ops);

    std::vector<MatchResult> results;
    results.reserve(scored.size());
    for (const ScoredSlot& ss : scored) {
        if (ss.score < tau) continue;
        const LeafId id = ids_[ss.slot];
        if (exclude && (*exclude)(id)) continue;
        results.push_back({id, ss.score, std::nullopt});
    }
    std::sort(results.begin(), results.end(), match_order);
    return results;
}

std::vector<MatchResult> FlatIndex::query_topk(const SparseHistogram& q, std::size_t k,
                                               const LeafPredicate* exclude,
                                               ScoreScratch* scratch,
                                               std::uint64_t* ops) const {
    std::vector<MatchResult> results = query(q, 0.0, exclude, scratch, ops);
    if (results.size() > k) {
        results.resize(k);
    }
    return results;
}

}  // namespace hibow
