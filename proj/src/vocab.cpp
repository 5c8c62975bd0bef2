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

#include "hibow/vocab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hibow/error.hpp"
#include "hibow/rng.hpp"

namespace hibow {

Descriptor Descriptor::binary(std::span<const std::uint8_t> bytes) {
    Descriptor d;
    d.kind_ = DescriptorKind::kBinary;
    d.bits_ = bytes.size() * 8;
    d.blocks_.assign((bytes.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        d.blocks_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (8 * (i % 8));
    }
    return d;
}

Descriptor Descriptor::real(std::vector<double> values) {
    Descriptor d;
    d.kind_ = DescriptorKind::kReal;
    d.values_ = std::move(values);
    return d;
}

std::vector<std::uint8_t> Descriptor::bytes() const {
    std::vector<std::uint8_t> out(bits_ / 8, 0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>((blocks_[i / 8] >> (8 * (i % 8))) & 0xff);
    }
    return out;
}

bool Descriptor::same_shape(const Descriptor& other) const {
    return kind_ == other.kind_ && bits_ == other.bits_ && dim() == other.dim();
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
    if (a.kind() == DescriptorKind::kBinary) {
        std::uint64_t dist = 0;
        const auto& x = a.blocks();
        const auto& y = b.blocks();
        for (std::size_t i = 0; i < x.size(); ++i) {
            dist += static_cast<std::uint64_t>(std::popcount(x[i] ^ y[i]));
        }
        return static_cast<double>(dist);
    }
    double dist = 0.0;
    const auto& x = a.values();
    const auto& y = b.values();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        dist += d * d;
    }
    return dist;
}

namespace {

Descriptor centroid_of(std::span<const Descriptor> all,
                       std::span<const std::uint32_t> members) {
    const Descriptor& first = all[members[0]];
    if (first.kind() == DescriptorKind::kBinary) {
        // bitwise majority; ties set the bit
        const std::size_t bits = first.bit_length();
        std::vector<std::uint32_t> ones(bits, 0);
        for (std::uint32_t m : members) {
            const auto& blocks = all[m].blocks();
            for (std::size_t bit = 0; bit < bits; ++bit) {
                ones[bit] += static_cast<std::uint32_t>((blocks[bit / 64] >> (bit % 64)) & 1u);
            }
        }
        std::vector<std::uint8_t> bytes(bits / 8, 0);
        for (std::size_t bit = 0; bit < bits; ++bit) {
            if (2 * ones[bit] >= members.size()) {
                bytes[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
            }
        }
        return Descriptor::binary(bytes);
    }
    std::vector<double> mean(first.dim(), 0.0);
    for (std::uint32_t m : members) {
        const auto& v = all[m].values();
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    }
    for (double& v : mean) v /= static_cast<double>(members.size());
    return Descriptor::real(std::move(mean));
}

// One k-means run: k-means++ seeding then Lloyd iterations. Assignment ties
// go to the lowest centroid index; an emptied cluster is reseeded from the
// farthest member of the largest cluster. Fewer than k clusters come back
// when the points cannot support k distinct centroids.
std::vector<std::vector<std::uint32_t>> kmeans_once(std::span<const Descriptor> all,
                                                    std::span<const std::uint32_t> members,
                                                    std::uint32_t k, Rng& rng,
                                                    double* cost) {
    std::vector<Descriptor> centroids;
    centroids.reserve(k);
    centroids.push_back(all[members[rng.below(members.size())]]);
    std::vector<double> seed_weight(members.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            double d = descriptor_distance(all[members[i]], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                d = std::min(d, descriptor_distance(all[members[i]], centroids[c]));
            }
            // squared distance in the underlying metric; descriptor_distance
            // is already squared for the real kind
            seed_weight[i] = all[members[i]].kind() == DescriptorKind::kBinary ? d * d : d;
            total += seed_weight[i];
        }
        if (total <= 0.0) {
            break;  // every point coincides with a chosen centroid
        }
        const double pick = rng.uniform01() * total;
        double acc = 0.0;
        std::size_t chosen = members.size() - 1;
        for (std::size_t i = 0; i < members.size(); ++i) {
            acc += seed_weight[i];
            if (acc >= pick) {
                chosen = i;
                break;
            }
        }
        centroids.push_back(all[members[chosen]]);
    }

    const std::size_t kk = centroids.size();
    std::vector<std::uint32_t> assign(members.size(), 0);
    std::vector<std::vector<std::uint32_t>> clusters(kk);
    constexpr int kMaxIters = 25;
    for (int iter = 0; iter < kMaxIters; ++iter) {
        bool changed = iter == 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            std::uint32_t best = 0;
            double best_d = descriptor_distance(all[members[i]], centroids[0]);
            for (std::uint32_t c = 1; c < kk; ++c) {
                const double d = descriptor_distance(all[members[i]], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        for (auto& c : clusters) c.clear();
        for (std::size_t i = 0; i < members.size(); ++i) {
            clusters[assign[i]].push_back(members[i]);
        }
        // reseed empty clusters from the farthest point of the largest one
        for (std::size_t c = 0; c < kk; ++c) {
            if (!clusters[c].empty()) continue;
            std::size_t largest = 0;
            for (std::size_t o = 1; o < kk; ++o) {
                if (clusters[o].size() > clusters[largest].size()) largest = o;
            }
            if (clusters[largest].size() < 2) continue;
            const Descriptor& center = centroids[largest];
            std::size_t far_pos = 0;
            double far_d = -1.0;
            for (std::size_t p = 0; p < clusters[largest].size(); ++p) {
                const double d = descriptor_distance(all[clusters[largest][p]], center);
                if (d > far_d) {
                    far_d = d;
                    far_pos = p;
                }
            }
            const std::uint32_t moved = clusters[largest][far_pos];
            clusters[largest].erase(clusters[largest].begin() +
                                    static_cast<std::ptrdiff_t>(far_pos));
            clusters[c].push_back(moved);
        }
        for (std::size_t c = 0; c < kk; ++c) {
            if (!clusters[c].empty()) {
                centroids[c] = centroid_of(all, clusters[c]);
            }
        }
    }
    clusters.erase(std::remove_if(clusters.begin(), clusters.end(),
                                  [](const auto& c) { return c.empty(); }),
                   clusters.end());
    if (cost) {
        double total = 0.0;
        for (const auto& cluster : clusters) {
            const Descriptor center = centroid_of(all, cluster);
            for (std::uint32_t m : cluster) {
                total += descriptor_distance(all[m], center);
            }
        }
        *cost = total;
    }
    return clusters;
}

// Best of a few restarts by within-cluster cost; ties keep the earlier run.
std::vector<std::vector<std::uint32_t>> kmeans(std::span<const Descriptor> all,
                                               std::span<const std::uint32_t> members,
                                               std::uint32_t k, Rng& rng) {
    constexpr int kAttempts = 8;
    std::vector<std::vector<std::uint32_t>> best;
    double best_cost = 0.0;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
        double cost = 0.0;
        auto clusters = kmeans_once(all, members, k, rng, &cost);
        if (attempt == 0 || cost < best_cost) {
            best_cost = cost;
            best = std::move(clusters);
        }
    }
    return best;
}

bool all_identical(std::span<const Descriptor> all,
                   std::span<const std::uint32_t> members) {
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (descriptor_distance(all[members[0]], all[members[i]]) != 0.0) {
            return false;
        }
    }
    return true;
}

}  // namespace

VocabularyTree build_vocab(std::span<const Descriptor> descriptors,
                           std::uint32_t branching, std::uint32_t depth,
                           std::uint64_t seed) {
    if (branching < 2) {
        throw ConfigError("vocabulary branching must be >= 2");
    }
    if (depth < 1) {
        throw ConfigError("vocabulary depth must be >= 1");
    }
    if (descriptors.empty()) {
        throw std::invalid_argument("no descriptors to cluster");
    }
    for (const Descriptor& d : descriptors) {
        if (!d.same_shape(descriptors[0])) {
            throw DataError("descriptors differ in kind or length");
        }
    }

    VocabularyTree tree;
    tree.kind_ = descriptors[0].kind();
    tree.branching_ = branching;
    tree.depth_ = depth;

    Rng rng(seed);
    std::vector<std::uint32_t> all_members(descriptors.size());
    for (std::uint32_t i = 0; i < descriptors.size(); ++i) all_members[i] = i;

    // depth-first construction; word ids assigned in visit order
    struct Frame {
        std::uint32_t node;
        std::vector<std::uint32_t> members;
        std::uint32_t level;
    };
    tree.nodes_.push_back({centroid_of(descriptors, all_members), {}, -1});
    std::vector<Frame> stack;
    stack.push_back({0, std::move(all_members), 0});
    while (!stack.empty()) {
        Frame frame = std::move(stack.back());
        stack.pop_back();
        const bool leaf = frame.level >= depth || frame.members.size() < branching ||
                          all_identical(descriptors, frame.members);
        if (leaf) {
            tree.nodes_[frame.node].word_id =
                    static_cast<std::int32_t>(tree.word_count_++);
            continue;
        }
        auto clusters = kmeans(descriptors, frame.members, branching, rng);
        if (clusters.size() < 2) {
            tree.nodes_[frame.node].word_id =
                    static_cast<std::int32_t>(tree.word_count_++);
            continue;
        }
        // push in reverse so children are visited in cluster order
        std::vector<std::uint32_t> child_ids;
        for (auto& cluster : clusters) {
            const auto child = static_cast<std::uint32_t>(tree.nodes_.size());
            tree.nodes_.push_back({centroid_of(descriptors, cluster), {}, -1});
            child_ids.push_back(child);
        }
        tree.nodes_[frame.node].children = child_ids;
        for (std::size_t c = clusters.size(); c-- > 0;) {
            stack.push_back({child_ids[c], std::move(clusters[c]), frame.level + 1});
        }
    }
    tree.idf_.weights.assign(tree.word_count_, 0.0);
    tree.idf_.doc_count = 1;
    return tree;
}

WordId VocabularyTree::word_for(const Descriptor& d) const {
    const Node* node = &nodes_[0];
    while (!node->children.empty()) {
        const Node* best = &nodes_[node->children[0]];
        double best_d = descriptor_distance(d, best->centroid);
        for (std::size_t c = 1; c < node->children.size(); ++c) {
            const Node* cand = &nodes_[node->children[c]];
            const double dist = descriptor_distance(d, cand->centroid);
            if (dist < best_d) {
                best_d = dist;
                best = cand;
            }
        }
        node = best;
    }
    return static_cast<WordId>(node->word_id);
}

std::vector<const Descriptor*> VocabularyTree::leaf_centroids() const {
    std::vector<const Descriptor*> leaves(word_count_, nullptr);
    for (const Node& n : nodes_) {
        if (n.word_id >= 0) {
            leaves[static_cast<std::size_t>(n.word_id)] = &n.centroid;
        }
    }
    return leaves;
}

void VocabularyTree::set_idf(IdfTable idf) {
    if (idf.weights.size() != word_count_) {
        throw std::invalid_argument("idf table size does not match word count");
    }
    idf_ = std::move(idf);
}

SparseHistogram quantize(std::span<const Descriptor> descriptors,
                         const VocabularyTree& vocab) {
    if (descriptors.empty()) {
        throw std::invalid_argument("empty frame");
    }
    std::vector<std::pair<WordId, double>> counts;
    counts.reserve(descriptors.size());
    for (const Descriptor& d : descriptors) {
        if (d.kind() != vocab.kind()) {
            throw DataError("descriptor kind does not match vocabulary");
        }
        counts.emplace_back(vocab.word_for(d), 1.0);
    }
    return SparseHistogram::from_counts(counts);
}

IdfTable compute_idf(std::span<const SparseHistogram> corpus, std::size_t vocab_size) {
    if (corpus.empty()) {
        throw std::invalid_argument("empty idf corpus");
    }
    std::vector<std::uint32_t> doc_freq(vocab_size, 0);
    for (const SparseHistogram& h : corpus) {
        for (const auto& e : h.entries()) {
            if (e.word >= vocab_size) {
                throw std::invalid_argument("word id outside vocabulary");
            }
            ++doc_freq[e.word];
        }
    }
    IdfTable idf;
    idf.doc_count = static_cast<std::uint32_t>(corpus.size());
    idf.weights.resize(vocab_size);
    for (std::size_t w = 0; w < vocab_size; ++w) {
        idf.weights[w] = std::log(static_cast<double>(idf.doc_count) /
                                  static_cast<double>(std::max(1u, doc_freq[w])));
    }
    return idf;
}

namespace {

void write_descriptor(std::ostream& out, const Descriptor& d) {
    if (d.kind() == DescriptorKind::kBinary) {
        out << "b:";
        char buf[3];
        for (std::uint8_t byte : d.bytes()) {
            std::snprintf(buf, sizeof buf, "%02x", byte);
            out << buf;
        }
    } else {
        const auto& v = d.values();
        char buf[32];
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", v[i]);
            out << (i ? "," : "") << buf;
        }
    }
}

Descriptor parse_descriptor_text(const std::string& text) {
    if (text.rfind("b:", 0) == 0) {
        const std::string hex = text.substr(2);
        if (hex.empty() || hex.size() % 2 != 0) {
            throw DataError("bad binary descriptor: " + text);
        }
        std::vector<std::uint8_t> bytes(hex.size() / 2);
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            unsigned v = 0;
            if (std::sscanf(hex.c_str() + 2 * i, "%2x", &v) != 1) {
                throw DataError("bad binary descriptor: " + text);
            }
            bytes[i] = static_cast<std::uint8_t>(v);
        }
        return Descriptor::binary(bytes);
    }
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw DataError("bad real descriptor: " + text);
        }
    }
    if (values.empty()) {
        throw DataError("empty descriptor line");
    }
    return Descriptor::real(std::move(values));
}

}  // namespace

void VocabularyTree::save(std::ostream& out) const {
    out << "hibow-vocab 1\n";
    out << "kind " << (kind_ == DescriptorKind::kBinary ? "binary" : "real") << "\n";
    out << "branching " << branching_ << "\n";
    out << "depth " << depth_ << "\n";
    out << "words " << word_count_ << "\n";
    out << "nodes " << nodes_.size() << "\n";
    for (const Node& n : nodes_) {
        out << n.word_id << " " << n.children.size();
        for (std::uint32_t c : n.children) out << " " << c;
        out << " ";
        write_descriptor(out, n.centroid);
        out << "\n";
    }
    out << "idf " << idf_.doc_count << "\n";
    char buf[32];
    for (std::size_t w = 0; w < idf_.weights.size(); ++w) {
        std::snprintf(buf, sizeof buf, "%.17g", idf_.weights[w]);
        out << buf << "\n";
    }
    if (!out) {
        throw DataError("failed to write vocabulary");
    }
}

VocabularyTree VocabularyTree::load(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "hibow-vocab" || version != 1) {
        throw DataError("not a vocabulary file");
    }
    VocabularyTree tree;
    std::string kind;
    std::size_t node_count = 0;
    if (!(in >> tag >> kind) || tag != "kind" ||
        !(in >> tag >> tree.branching_) || tag != "branching" ||
        !(in >> tag >> tree.depth_) || tag != "depth" ||
        !(in >> tag >> tree.word_count_) || tag != "words" ||
        !(in >> tag >> node_count) || tag != "nodes") {
        throw DataError("malformed vocabulary header");
    }
    tree.kind_ = kind == "binary" ? DescriptorKind::kBinary : DescriptorKind::kReal;
    tree.nodes_.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
        Node n;
        std::size_t nkids = 0;
        if (!(in >> n.word_id >> nkids)) {
            throw DataError("malformed vocabulary node");
        }
        n.children.resize(nkids);
        for (auto& c : n.children) {
            if (!(in >> c)) {
                throw DataError("malformed vocabulary node");
            }
        }
        std::string text;
        if (!(in >> text)) {
            throw DataError("malformed vocabulary node");
        }
        n.centroid = parse_descriptor_text(text);
        tree.nodes_.push_back(std::move(n));
    }
    if (!(in >> tag >> tree.idf_.doc_count) || tag != "idf") {
        throw DataError("malformed vocabulary idf block");
    }
    tree.idf_.weights.resize(tree.word_count_);
    for (double& w : tree.idf_.weights) {
        if (!(in >> w)) {
            throw DataError("malformed vocabulary idf block");
        }
    }
    return tree;
}

std::uint64_t VocabularyTree::content_hash() const {
    std::ostringstream ss;
    save(ss);
    const std::string s = ss.str();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace hibow
