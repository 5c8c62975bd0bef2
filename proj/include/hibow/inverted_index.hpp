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
#include <span>
#include <vector>

#include "hibow/histogram.hpp"

namespace hibow {

/// One entry of a posting list: node slot within a layer plus the stored
/// weight of the word in that node's histogram.
struct Posting {
    std::uint32_t slot;
    double weight;
};

/// Word -> (slot, weight) posting lists over a set of node histograms.
/// Append-only; slots must be added in ascending order so every list stays
/// sorted by slot.
class InvertedIndex {
  public:
    explicit InvertedIndex(std::size_t vocab_size) : lists_(vocab_size) {}

    void add(std::uint32_t slot, const SparseHistogram& h);

    const std::vector<Posting>& postings(WordId word) const { return lists_[word]; }
    std::size_t vocab_size() const { return lists_.size(); }
    std::uint32_t node_count() const { return node_count_; }

    /// Total posting entries along the query's words; the cost of one
    /// accumulation pass over this index.
    std::uint64_t posting_mass(const SparseHistogram& q) const;

  private:
    std::vector<std::vector<Posting>> lists_;
    std::uint32_t node_count_ = 0;
};

/// Reusable per-query scratch space. Epoch-stamped so resets are O(touched).
/// One instance per concurrent query; not thread-safe.
class ScoreScratch {
  public:
    void ensure(std::size_t slots);

    void begin_scores();
    void accumulate(std::uint32_t slot, double value);
    double score(std::uint32_t slot) const;
    const std::vector<std::uint32_t>& touched() const { return touched_; }

    void begin_active(std::span<const std::uint32_t> candidates);
    bool is_active(std::uint32_t slot) const { return active_[slot] == active_epoch_; }

  private:
    std::vector<double> score_;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint32_t> active_;
    std::vector<std::uint32_t> touched_;
    std::uint32_t epoch_ = 0;
    std::uint32_t active_epoch_ = 0;
};

struct ScoredSlot {
    std::uint32_t slot;
    double score;
};

/// Intersection scores of the query against every node sharing at least one
/// word, via one pass over the query's posting lists. Output is sorted by
/// slot and contains only strictly positive scores.
///
/// Accumulation is per slot in ascending query-word order; merge_score adds
/// the same terms in the same order, so the two paths agree bit for bit.
void score_all(const InvertedIndex& index, const SparseHistogram& q,
               ScoreScratch& scratch, std::vector<ScoredSlot>& out,
               std::uint64_t* ops = nullptr);

/// Same as score_all restricted to `candidates` (ascending slots).
void score_filtered(const InvertedIndex& index, const SparseHistogram& q,
                    std::span<const std::uint32_t> candidates,
                    ScoreScratch& scratch, std::vector<ScoredSlot>& out,
                    std::uint64_t* ops = nullptr);

/// Intersection of query and a single node histogram by sorted merge.
double merge_score(const SparseHistogram& q, const SparseHistogram& node,
                   std::uint64_t* ops = nullptr);

}  // namespace hibow
