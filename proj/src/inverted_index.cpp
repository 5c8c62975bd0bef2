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

#include "hibow/inverted_index.hpp"

#include <algorithm>
#include <stdexcept>

namespace hibow {

void InvertedIndex::add(std::uint32_t slot, const SparseHistogram& h) {
    if (node_count_ > 0 && slot < node_count_) {
        throw std::invalid_argument("posting slots must be appended in ascending order");
    }
    for (const auto& e : h.entries()) {
        if (e.word >= lists_.size()) {
            throw std::invalid_argument("word id outside vocabulary");
        }
        lists_[e.word].push_back({slot, e.weight});
    }
    node_count_ = slot + 1;
}

std::uint64_t InvertedIndex::posting_mass(const SparseHistogram& q) const {
    std::uint64_t mass = 0;
    for (const auto& e : q.entries()) {
        if (e.word < lists_.size()) {
            mass += lists_[e.word].size();
        }
    }
    return mass;
}

void ScoreScratch::ensure(std::size_t slots) {
    if (score_.size() < slots) {
        score_.resize(slots, 0.0);
        stamp_.resize(slots, 0);
        active_.resize(slots, 0);
    }
}

void ScoreScratch::begin_scores() {
    ++epoch_;
    touched_.clear();
    if (epoch_ == 0) {  // wrapped; invalidate all stamps
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
}

void ScoreScratch::accumulate(std::uint32_t slot, double value) {
    if (stamp_[slot] != epoch_) {
        stamp_[slot] = epoch_;
        score_[slot] = 0.0;
        touched_.push_back(slot);
    }
    score_[slot] += value;
}

double ScoreScratch::score(std::uint32_t slot) const {
    return stamp_[slot] == epoch_ ? score_[slot] : 0.0;
}

void ScoreScratch::begin_active(std::span<const std::uint32_t> candidates) {
    ++active_epoch_;
    if (active_epoch_ == 0) {
        std::fill(active_.begin(), active_.end(), 0);
        active_epoch_ = 1;
    }
    for (std::uint32_t c : candidates) {
        active_[c] = active_epoch_;
    }
}

namespace {

void finish_scores(ScoreScratch& scratch, std::vector<ScoredSlot>& out) {
    out.clear();
    out.reserve(scratch.touched().size());
    for (std::uint32_t slot : scratch.touched()) {
        out.push_back({slot, scratch.score(slot)});
    }
    std::sort(out.begin(), out.end(),
              [](const ScoredSlot& a, const ScoredSlot& b) { return a.slot < b.slot; });
}

}  // namespace

void score_all(const InvertedIndex& index, const SparseHistogram& q,
               ScoreScratch& scratch, std::vector<ScoredSlot>& out,
               std::uint64_t* ops) {
    scratch.ensure(index.node_count());
    scratch.begin_scores();
    std::uint64_t visited = 0;
    for (const auto& e : q.entries()) {
        if (e.word >= index.vocab_size()) continue;
        const auto& list = index.postings(e.word);
        visited += list.size();
        for (const Posting& p : list) {
            scratch.accumulate(p.slot, std::min(e.weight, p.weight));
        }
    }
    finish_scores(scratch, out);
    if (ops) *ops += visited + out.size();
}

void score_filtered(const InvertedIndex& index, const SparseHistogram& q,
                    std::span<const std::uint32_t> candidates,
                    ScoreScratch& scratch, std::vector<ScoredSlot>& out,
                    std::uint64_t* ops) {
    scratch.ensure(index.node_count());
    scratch.begin_active(candidates);
    scratch.begin_scores();
    std::uint64_t visited = 0;
    for (const auto& e : q.entries()) {
        if (e.word >= index.vocab_size()) continue;
        const auto& list = index.postings(e.word);
        visited += list.size();
        for (const Posting& p : list) {
            if (scratch.is_active(p.slot)) {
                scratch.accumulate(p.slot, std::min(e.weight, p.weight));
            }
        }
    }
    finish_scores(scratch, out);
    if (ops) *ops += visited + out.size();
}

double merge_score(const SparseHistogram& q, const SparseHistogram& node,
                   std::uint64_t* ops) {
    if (ops) *ops += q.size() + node.size();
    return intersection(q, node);
}

}  // namespace hibow
