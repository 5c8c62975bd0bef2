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

#include "hibow/histogram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hibow {

NormState pooled_state(PoolingMode mode) {
    switch (mode) {
        case PoolingMode::kMean: return NormState::kPooledMean;
        case PoolingMode::kSum: return NormState::kPooledSum;
        case PoolingMode::kMax: return NormState::kPooledMax;
    }
    throw std::invalid_argument("unknown pooling mode");
}

const char* to_string(PoolingMode mode) {
    switch (mode) {
        case PoolingMode::kMean: return "mean";
        case PoolingMode::kSum: return "sum";
        case PoolingMode::kMax: return "max";
    }
    return "?";
}

PoolingMode pooling_from_string(std::string_view name) {
    if (name == "mean") return PoolingMode::kMean;
    if (name == "sum") return PoolingMode::kSum;
    if (name == "max") return PoolingMode::kMax;
    throw std::invalid_argument("unknown pooling mode: " + std::string(name));
}

SparseHistogram::SparseHistogram(std::vector<Entry> entries, NormState state)
    : state_(state) {
    entries_.reserve(entries.size());
    WordId prev = 0;
    bool first = true;
    for (const Entry& e : entries) {
        if (!first && e.word <= prev) {
            throw std::invalid_argument("histogram word ids must be strictly increasing");
        }
        if (e.weight < 0.0 || !std::isfinite(e.weight)) {
            throw std::invalid_argument("histogram weights must be finite and nonnegative");
        }
        prev = e.word;
        first = false;
        if (e.weight >= kWeightEpsilon) {
            entries_.push_back(e);
        }
    }
    if (state_ == NormState::kTfidfNormalized) {
        double mass = 0.0;
        for (const Entry& e : entries_) mass += e.weight;
        if (std::abs(mass - 1.0) > 1e-9) {
            throw std::invalid_argument("tfidf-normalized histogram must sum to 1");
        }
    }
}

SparseHistogram SparseHistogram::from_counts(
        std::span<const std::pair<WordId, double>> counts) {
    std::vector<std::pair<WordId, double>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<Entry> entries;
    entries.reserve(sorted.size());
    for (const auto& [word, count] : sorted) {
        if (!entries.empty() && entries.back().word == word) {
            entries.back().weight += count;
        } else {
            entries.push_back({word, count});
        }
    }
    return SparseHistogram(std::move(entries), NormState::kRawCounts);
}

double SparseHistogram::total_mass() const {
    double mass = 0.0;
    for (const Entry& e : entries_) mass += e.weight;
    return mass;
}

double SparseHistogram::weight_at(WordId word) const {
    const auto it = std::lower_bound(
            entries_.begin(), entries_.end(), word,
            [](const Entry& e, WordId w) { return e.word < w; });
    if (it != entries_.end() && it->word == word) {
        return it->weight;
    }
    return 0.0;
}

double intersection(const SparseHistogram& q, const SparseHistogram& p) {
    const auto& a = q.entries();
    const auto& b = p.entries();
    double score = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].word == b[j].word) {
            score += std::min(a[i].weight, b[j].weight);
            ++i;
            ++j;
        } else if (a[i].word < b[j].word) {
            ++i;
        } else {
            ++j;
        }
    }
    return score;
}

namespace {

SparseHistogram pool_impl(std::span<const SparseHistogram* const> children,
                          PoolingMode mode) {
    if (children.empty()) {
        throw std::invalid_argument("empty pool group");
    }
    // (word, weight) pairs sorted by word then weight; summation order is then
    // independent of the child permutation, so pooling is bit-exact invariant.
    std::vector<std::pair<WordId, double>> all;
    std::size_t total = 0;
    for (const SparseHistogram* c : children) total += c->size();
    all.reserve(total);
    for (const SparseHistogram* c : children) {
        for (const auto& e : c->entries()) {
            all.emplace_back(e.word, e.weight);
        }
    }
    std::sort(all.begin(), all.end());

    const double inv_k = 1.0 / static_cast<double>(children.size());
    std::vector<SparseHistogram::Entry> out;
    std::size_t i = 0;
    while (i < all.size()) {
        const WordId word = all[i].first;
        double acc = all[i].second;
        ++i;
        while (i < all.size() && all[i].first == word) {
            if (mode == PoolingMode::kMax) {
                acc = std::max(acc, all[i].second);
            } else {
                acc += all[i].second;
            }
            ++i;
        }
        if (mode == PoolingMode::kMean) {
            acc *= inv_k;
        }
        out.push_back({word, acc});
    }
    return SparseHistogram(std::move(out), pooled_state(mode));
}

}  // namespace

SparseHistogram pool(std::span<const SparseHistogram> children, PoolingMode mode) {
    std::vector<const SparseHistogram*> ptrs;
    ptrs.reserve(children.size());
    for (const SparseHistogram& c : children) ptrs.push_back(&c);
    return pool_impl(ptrs, mode);
}

SparseHistogram pool(std::span<const SparseHistogram* const> children, PoolingMode mode) {
    return pool_impl(children, mode);
}

SparseHistogram tfidf_normalize(const SparseHistogram& counts, const IdfTable& idf) {
    if (counts.norm_state() != NormState::kRawCounts) {
        throw std::invalid_argument("tfidf_normalize expects raw counts");
    }
    const double total = counts.total_mass();
    std::vector<SparseHistogram::Entry> weighted;
    weighted.reserve(counts.size());
    double mass = 0.0;
    for (const auto& e : counts.entries()) {
        if (e.word >= idf.weights.size()) {
            throw std::invalid_argument("word id outside idf table");
        }
        const double w = (e.weight / total) * idf.weights[e.word];
        if (w >= kWeightEpsilon) {
            weighted.push_back({e.word, w});
            mass += w;
        }
    }
    if (weighted.empty()) {
        throw std::invalid_argument("empty histogram after weighting");
    }
    for (auto& e : weighted) {
        e.weight /= mass;
    }
    return SparseHistogram(std::move(weighted), NormState::kTfidfNormalized);
}

}  // namespace hibow
