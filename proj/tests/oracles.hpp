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

// Independent oracles used by the tests. Everything here evaluates the slow,
// obviously-correct way (dense vectors, exhaustive scans) and must stay
// decoupled from the index implementations it checks.

#pragma once

#include <algorithm>
#include <vector>

#include "hibow/histogram.hpp"
#include "hibow/match.hpp"
#include "hibow/rng.hpp"
#include "hibow/vocab.hpp"

namespace hibow::test {

/// Intersection kernel over dense vectors of length `vocab`.
inline double dense_intersection(const SparseHistogram& a, const SparseHistogram& b,
                                 std::size_t vocab) {
    std::vector<double> va(vocab, 0.0), vb(vocab, 0.0);
    for (const auto& e : a.entries()) va[e.word] = e.weight;
    for (const auto& e : b.entries()) vb[e.word] = e.weight;
    double score = 0.0;
    for (std::size_t i = 0; i < vocab; ++i) {
        score += std::min(va[i], vb[i]);
    }
    return score;
}

/// Random sparse histogram: up to max_words distinct words, weights in
/// [0.05, 2).
inline SparseHistogram random_histogram(Rng& rng, std::size_t vocab,
                                        std::size_t max_words) {
    const std::size_t k = 1 + rng.below(max_words);
    std::vector<std::pair<WordId, double>> entries;
    std::vector<char> used(vocab, 0);
    while (entries.size() < k) {
        const auto w = static_cast<WordId>(rng.below(vocab));
        if (!used[w]) {
            used[w] = 1;
            entries.emplace_back(w, rng.uniform(0.05, 2.0));
        }
    }
    return SparseHistogram::from_counts(entries);
}

/// Same, L1-normalized to mass 1.
inline SparseHistogram random_normalized_histogram(Rng& rng, std::size_t vocab,
                                                   std::size_t max_words) {
    const SparseHistogram raw = random_histogram(rng, vocab, max_words);
    const double mass = raw.total_mass();
    std::vector<SparseHistogram::Entry> entries;
    for (const auto& e : raw.entries()) {
        entries.push_back({e.word, e.weight / mass});
    }
    return SparseHistogram(std::move(entries), NormState::kTfidfNormalized);
}

/// Exhaustive reference for threshold queries over stored histograms.
inline std::vector<MatchResult> brute_matches(
        const std::vector<std::pair<LeafId, SparseHistogram>>& stored,
        const SparseHistogram& q, double tau, std::size_t vocab,
        const LeafPredicate* exclude = nullptr) {
    std::vector<MatchResult> out;
    for (const auto& [id, hist] : stored) {
        const double score = dense_intersection(q, hist, vocab);
        if (score <= 0.0 || score < tau) continue;
        if (exclude && (*exclude)(id)) continue;
        out.push_back({id, score, std::nullopt});
    }
    std::sort(out.begin(), out.end(), match_order);
    return out;
}

/// Nearest leaf centroid by exhaustive scan, ties to the lowest word id.
inline WordId brute_nearest_word(const Descriptor& d, const VocabularyTree& vocab) {
    const auto leaves = vocab.leaf_centroids();
    WordId best = 0;
    double best_dist = descriptor_distance(d, *leaves[0]);
    for (std::size_t w = 1; w < leaves.size(); ++w) {
        const double dist = descriptor_distance(d, *leaves[w]);
        if (dist < best_dist) {
            best_dist = dist;
            best = static_cast<WordId>(w);
        }
    }
    return best;
}

}  // namespace hibow::test
