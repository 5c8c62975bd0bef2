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
#include <iosfwd>
#include <span>
#include <vector>

#include "hibow/histogram.hpp"

namespace hibow {

enum class DescriptorKind : std::uint8_t { kBinary, kReal };

/// Local feature descriptor: either a fixed-length bit string (compared by
/// Hamming distance) or a fixed-length real vector (compared by Euclidean
/// distance). All descriptors fed to one vocabulary share kind and length.
class Descriptor {
  public:
    Descriptor() = default;

    static Descriptor binary(std::span<const std::uint8_t> bytes);
    static Descriptor real(std::vector<double> values);

    DescriptorKind kind() const { return kind_; }
    std::size_t bit_length() const { return bits_; }
    std::size_t dim() const { return values_.size(); }
    const std::vector<std::uint64_t>& blocks() const { return blocks_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<std::uint8_t> bytes() const;

    bool same_shape(const Descriptor& other) const;
    bool operator==(const Descriptor&) const = default;

  private:
    DescriptorKind kind_ = DescriptorKind::kReal;
    std::vector<std::uint64_t> blocks_;  // binary payload, little-endian bit order
    std::size_t bits_ = 0;
    std::vector<double> values_;  // real payload
};

/// Hamming distance for binary descriptors, squared Euclidean for real ones.
double descriptor_distance(const Descriptor& a, const Descriptor& b);

/// Vocabulary built by hierarchical k-means. Leaves carry dense word ids
/// (0..N-1). Immutable after build; concurrent quantization is safe.
class VocabularyTree {
  public:
    struct Node {
        Descriptor centroid;
        std::vector<std::uint32_t> children;  // node indices; empty for leaves
        std::int32_t word_id = -1;            // >= 0 for leaves
    };

    /// Number of distinct words.
    std::size_t word_count() const { return word_count_; }
    std::uint32_t branching() const { return branching_; }
    std::uint32_t depth() const { return depth_; }
    DescriptorKind kind() const { return kind_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const IdfTable& idf() const { return idf_; }
    void set_idf(IdfTable idf);

    /// Word id for one descriptor: nearest-centroid descent from the root,
    /// ties resolved to the lowest child index.
    WordId word_for(const Descriptor& d) const;

    /// Leaf word id -> leaf centroid, for brute-force checks.
    std::vector<const Descriptor*> leaf_centroids() const;

    /// FNV-1a hash over the serialized tree, for index headers.
    std::uint64_t content_hash() const;

    void save(std::ostream& out) const;
    static VocabularyTree load(std::istream& in);

    friend VocabularyTree build_vocab(std::span<const Descriptor>, std::uint32_t,
                                      std::uint32_t, std::uint64_t);

  private:
    DescriptorKind kind_ = DescriptorKind::kReal;
    std::uint32_t branching_ = 0;
    std::uint32_t depth_ = 0;
    std::size_t word_count_ = 0;
    std::vector<Node> nodes_;  // nodes_[0] is the root
    IdfTable idf_;
};

/// Hierarchical k-means with k-means++ seeding. Deterministic for a given
/// seed. Clusters smaller than `branching` stop splitting early, so the word
/// count may be below branching^depth. Throws ConfigError for branching < 2
/// or depth < 1.
VocabularyTree build_vocab(std::span<const Descriptor> descriptors,
                           std::uint32_t branching, std::uint32_t depth,
                           std::uint64_t seed);

/// Quantizes one frame's descriptors into a raw-count histogram.
/// Throws std::invalid_argument("empty frame") on an empty descriptor list.
SparseHistogram quantize(std::span<const Descriptor> descriptors,
                         const VocabularyTree& vocab);

/// IDF over a corpus of raw-count histograms: ln(D / max(1, n_i)).
IdfTable compute_idf(std::span<const SparseHistogram> corpus, std::size_t vocab_size);

}  // namespace hibow
