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
#include <string_view>
#include <vector>

namespace hibow {

using WordId = std::uint32_t;

/// Weights smaller than this are dropped after every operation to keep
/// histograms sparse.
inline constexpr double kWeightEpsilon = 1e-12;

/// Provenance of the weights stored in a histogram.
enum class NormState : std::uint8_t {
    kRawCounts,
    kTfidfNormalized,  // L1 norm 1 within 1e-9
    kPooledSum,
    kPooledMax,
    kPooledMean,
};

enum class PoolingMode : std::uint8_t { kMean, kSum, kMax };

NormState pooled_state(PoolingMode mode);
const char* to_string(PoolingMode mode);
PoolingMode pooling_from_string(std::string_view name);

/// Inverse document frequencies for a fixed vocabulary.
/// weights[i] = ln(doc_count / max(1, n_i)) where n_i is the number of
/// documents containing word i.
struct IdfTable {
    std::vector<double> weights;
    std::uint32_t doc_count = 0;

    std::size_t vocab_size() const { return weights.size(); }
};

/// Sparse nonnegative histogram over a word vocabulary. Entries are sorted by
/// strictly increasing word id and never store zero (or sub-epsilon) weights.
class SparseHistogram {
  public:
    struct Entry {
        WordId word;
        double weight;

        bool operator==(const Entry&) const = default;
    };

    SparseHistogram() = default;

    /// Takes ownership of `entries`, which must be sorted by strictly
    /// increasing word id with positive weights. Sub-epsilon weights are
    /// dropped. Throws std::invalid_argument on ordering/sign violations and
    /// when a tfidf-normalized histogram does not sum to 1 within 1e-9.
    SparseHistogram(std::vector<Entry> entries, NormState state);

    /// Builds a raw-count histogram from unsorted (word, count) pairs,
    /// accumulating duplicates.
    static SparseHistogram from_counts(std::span<const std::pair<WordId, double>> counts);

    const std::vector<Entry>& entries() const { return entries_; }
    NormState norm_state() const { return state_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Sum of all weights.
    double total_mass() const;

    /// Weight at `word`, 0 if absent. Binary search.
    double weight_at(WordId word) const;

    bool operator==(const SparseHistogram&) const = default;

  private:
    std::vector<Entry> entries_;
    NormState state_ = NormState::kRawCounts;
};

/// Intersection kernel: sum over the support union of min(q_i, p_i).
/// Symmetric, bounded by min(total_mass(q), total_mass(p)).
double intersection(const SparseHistogram& q, const SparseHistogram& p);

/// Pools child histograms into a parent. mean: per-word average over all K
/// children (absent entries count as zero); sum: per-word sum; max: per-word
/// max. The result's support is the union of the child supports and its
/// norm_state is the pooled variant. Throws std::invalid_argument("empty pool
/// group") on an empty child list. Permutation-invariant, bit-exact.
SparseHistogram pool(std::span<const SparseHistogram> children, PoolingMode mode);
SparseHistogram pool(std::span<const SparseHistogram* const> children, PoolingMode mode);

/// TF-IDF weighting: weight_i = (count_i / total) * idf[i], dropped when the
/// idf is zero, then L1-normalized to sum 1. Input must be raw counts.
/// Throws std::invalid_argument("empty histogram after weighting") when every
/// word has zero idf.
SparseHistogram tfidf_normalize(const SparseHistogram& counts, const IdfTable& idf);

}  // namespace hibow
