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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hibow/histogram.hpp"
#include "hibow/inverted_index.hpp"
#include "hibow/match.hpp"

namespace hibow {

/// Camera pose. Only the translation participates in match correctness; the
/// rotation is carried along for completeness.
struct Pose {
    std::int64_t t = 0;
    std::array<double, 3> translation{0.0, 0.0, 0.0};
    std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
};

double translation_distance(const Pose& a, const Pose& b);

/// Returns true when rotation^T * rotation is the identity within tol.
bool rotation_orthonormal(const Pose& p, double tol = 1e-6);

struct LeafMeta {
    std::int64_t timestamp = 0;  // frame index
    std::optional<Pose> pose;
    std::optional<std::uint32_t> label;
};

/// Fixed topology of the pooling tree: `depth` layers including the leaves,
/// constant `branching` per non-leaf layer. depth 1 degenerates to flat
/// search.
struct TreeTopology {
    std::uint32_t depth = 1;
    std::uint32_t branching = 2;
    PoolingMode pooling = PoolingMode::kMean;

    void validate() const;  // throws ConfigError
    std::string label() const;  // e.g. "d2b8-mean"
};

/// Layered pooling tree over a temporally ordered leaf stream with one
/// inverted index per layer.
///
/// Insertion is append-only: whenever `branching` consecutive nodes complete
/// at some layer they are pooled into a parent one layer up, cascading toward
/// the root. Nodes are never mutated after creation. Leaves whose ancestors
/// are not finalized yet (the tail of the stream) are reached through the
/// coarsest finalized node available, or scored directly at the leaf layer.
///
/// Threshold search walks layers coarse to fine, keeps nodes scoring >= tau
/// and descends only into their children. With sum or max pooling a parent
/// never scores below any of its children, so the pruning is lossless and the
/// result set matches flat inverted-index search exactly. With mean pooling
/// the result set is a subset of the flat one.
class HierIndex {
  public:
    HierIndex(TreeTopology topology, std::size_t vocab_size);

    /// Appends a leaf. Ids must arrive in strictly increasing order.
    void insert(LeafId id, SparseHistogram h, LeafMeta meta = {});

    std::vector<MatchResult> query_threshold(const SparseHistogram& q, double tau,
                                             const LeafPredicate* exclude = nullptr,
                                             ScoreScratch* scratch = nullptr,
                                             std::uint64_t* ops = nullptr) const;

    /// Per-layer multipliers on the query threshold (layer 0 = leaves). One
    /// global tau is the default; scales other than 1 trade recall for
    /// pruning and void the sum/max exactness guarantee. Runtime knob, not
    /// persisted.
    void set_layer_tau_scales(std::vector<double> scales);
    double layer_tau_scale(std::size_t layer) const {
        return layer < tau_scales_.size() ? tau_scales_[layer] : 1.0;
    }

    /// Keeps the k_keep best nodes per layer (ties to the lowest id), descends
    /// into their children, and returns the k_return best leaves.
    std::vector<MatchResult> query_topk(const SparseHistogram& q, std::size_t k_keep,
                                        std::size_t k_return,
                                        const LeafPredicate* exclude = nullptr,
                                        ScoreScratch* scratch = nullptr,
                                        std::uint64_t* ops = nullptr) const;

    std::size_t leaf_count() const { return layers_[0].hists.size(); }
    std::size_t layer_count() const { return layers_.size(); }
    std::size_t layer_size(std::size_t layer) const { return layers_[layer].hists.size(); }
    std::size_t vocab_size() const { return vocab_size_; }
    const TreeTopology& topology() const { return topo_; }
    bool sealed() const { return sealed_; }

    LeafId leaf_id(std::uint32_t slot) const { return ids_[slot]; }
    const LeafMeta& leaf_meta(std::uint32_t slot) const { return meta_[slot]; }
    const SparseHistogram& node_histogram(std::size_t layer, std::uint32_t slot) const {
        return layers_[layer].hists[slot];
    }
    const std::vector<std::uint32_t>& node_children(std::size_t layer,
                                                    std::uint32_t slot) const {
        return layers_[layer].children[slot];
    }

    /// Leaves not yet covered by a finalized layer-1 parent.
    std::vector<LeafId> frontier() const;

    void save(std::ostream& out, std::uint64_t vocab_hash = 0) const;
    static HierIndex load(std::istream& in, std::uint64_t* vocab_hash = nullptr);

    struct GroupedLeaf {
        LeafId id;
        SparseHistogram hist;
        std::uint32_t label;
    };

    enum class GroupingStrategy : std::uint8_t {
        kLabelThenRandom,
        kLabelThenGreedyAffinity,
    };

    /// Builds a sealed 3-layer index: layer 1 pools leaves sharing a label,
    /// layer 2 groups layer-1 nodes `group_size` at a time, either by a seeded
    /// shuffle or greedily by histogram-intersection affinity.
    static HierIndex build_grouped(std::vector<GroupedLeaf> leaves,
                                   GroupingStrategy strategy, std::size_t group_size,
                                   PoolingMode pooling, std::uint64_t seed,
                                   std::size_t vocab_size);

  private:
    struct Layer {
        std::vector<SparseHistogram> hists;
        std::vector<std::vector<std::uint32_t>> children;  // empty lists at layer 0
        InvertedIndex index;
        std::uint64_t covered_below = 0;  // nodes of the layer beneath with a parent here

        explicit Layer(std::size_t vocab_size) : index(vocab_size) {}
    };

    HierIndex() = default;  // for load()

    void append_node(std::size_t layer, SparseHistogram h,
                     std::vector<std::uint32_t> children);
    void cascade_pooling();
    std::size_t top_layer() const;  // coarsest layer with >= 1 finalized node

    // Scores `candidates` at `layer`; full-index pass when candidates covers
    // the whole layer, otherwise whichever of filtered pass / per-candidate
    // merge is cheaper. All paths produce bit-identical scores.
    void score_layer(std::size_t layer, const SparseHistogram& q,
                     const std::vector<std::uint32_t>& candidates, bool all_nodes,
                     ScoreScratch& scratch, std::vector<ScoredSlot>& out,
                     std::uint64_t* ops) const;

    // Children of the retained slots plus nodes below `layer` that have no
    // parent yet, ascending and unique.
    std::vector<std::uint32_t> descend(std::size_t layer,
                                       const std::vector<std::uint32_t>& retained) const;

    std::vector<MatchResult> leaf_results(const std::vector<ScoredSlot>& scored,
                                          double tau, const LeafPredicate* exclude) const;

    TreeTopology topo_;
    std::size_t vocab_size_ = 0;
    bool sealed_ = false;
    std::vector<Layer> layers_;
    std::vector<LeafId> ids_;
    std::vector<LeafMeta> meta_;
    std::vector<double> tau_scales_;  // empty: every layer at scale 1
};

/// Lumps temporally adjacent matches: leaves whose ids differ by <= gap join
/// one island (transitively). Returns the input annotated with island ids,
/// numbered by ascending first frame. Ordering is preserved.
std::vector<MatchResult> group_islands(std::vector<MatchResult> results,
                                       std::int64_t gap);

/// One representative per island: the highest-scoring member (lowest id on
/// ties), sorted by (score desc, id asc). Input must be annotated.
std::vector<MatchResult> island_representatives(const std::vector<MatchResult>& results);

}  // namespace hibow
