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
#include <unordered_map>
#include <vector>

#include "hibow/histogram.hpp"
#include "hibow/inverted_index.hpp"
#include "hibow/match.hpp"

namespace hibow {

/// Baseline: linear search over all stored histograms accelerated by a single
/// inverted index. Single writer, multiple concurrent readers (each reader
/// with its own ScoreScratch).
class FlatIndex {
  public:
    explicit FlatIndex(std::size_t vocab_size) : index_(vocab_size) {}

    /// Appends a histogram under `id`. Throws std::invalid_argument on a
    /// duplicate id.
    void insert(LeafId id, SparseHistogram h);

    /// All nodes sharing at least one word with q whose intersection score is
    /// >= tau and not excluded, sorted by (score desc, id asc).
    std::vector<MatchResult> query(const SparseHistogram& q, double tau,
                                   const LeafPredicate* exclude = nullptr,
                                   ScoreScratch* scratch = nullptr,
                                   std::uint64_t* ops = nullptr) const;

    /// Top k scored nodes under the same ordering (no threshold).
    std::vector<MatchResult> query_topk(const SparseHistogram& q, std::size_t k,
                                        const LeafPredicate* exclude = nullptr,
                                        ScoreScratch* scratch = nullptr,
                                        std::uint64_t* ops = nullptr) const;

    std::size_t size() const { return ids_.size(); }
    std::size_t vocab_size() const { return index_.vocab_size(); }
    LeafId id_at(std::uint32_t slot) const { return ids_[slot]; }
    const SparseHistogram& histogram_at(std::uint32_t slot) const { return hists_[slot]; }

  private:
    InvertedIndex index_;
    std::vector<SparseHistogram> hists_;
    std::vector<LeafId> ids_;
    std::unordered_map<LeafId, std::uint32_t> slot_by_id_;
};

}  // namespace hibow
