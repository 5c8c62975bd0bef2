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

#include "hibow/hier_index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "hibow/error.hpp"
#include "hibow/rng.hpp"

namespace hibow {

double translation_distance(const Pose& a, const Pose& b) {
    const double dx = a.translation[0] - b.translation[0];
    const double dy = a.translation[1] - b.translation[1];
    const double dz = a.translation[2] - b.translation[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

bool rotation_orthonormal(const Pose& p, double tol) {
    // max |R^T R - I|
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) {
                dot += p.rotation[3 * k + i] * p.rotation[3 * k + j];
            }
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst <= tol;
}

void TreeTopology::validate() const {
    if (depth < 1) {
        throw ConfigError("tree depth must be >= 1");
    }
    if (branching < 2) {
        throw ConfigError("branching factor must be >= 2");
    }
}

std::string TreeTopology::label() const {
    return "d" + std::to_string(depth) + "b" + std::to_string(branching) + "-" +
           to_string(pooling);
}

HierIndex::HierIndex(TreeTopology topology, std::size_t vocab_size)
    : topo_(topology), vocab_size_(vocab_size) {
    topo_.validate();
    layers_.reserve(topo_.depth);
    for (std::uint32_t l = 0; l < topo_.depth; ++l) {
        layers_.emplace_back(vocab_size_);
    }
}

void HierIndex::append_node(std::size_t layer, SparseHistogram h,
                            std::vector<std::uint32_t> children) {
    Layer& L = layers_[layer];
    const auto slot = static_cast<std::uint32_t>(L.hists.size());
    L.index.add(slot, h);
    L.covered_below += children.size();
    L.children.push_back(std::move(children));
    L.hists.push_back(std::move(h));
}

void HierIndex::insert(LeafId id, SparseHistogram h, LeafMeta meta) {
    if (sealed_) {
        throw std::logic_error("grouped index is sealed; incremental insert unavailable");
    }
    if (!ids_.empty() && id <= ids_.back()) {
        throw std::invalid_argument("leaf ids must arrive in strictly increasing order");
    }
    ids_.push_back(id);
    meta_.push_back(std::move(meta));
    append_node(0, std::move(h), {});
    cascade_pooling();
}

void HierIndex::cascade_pooling() {
    const std::uint32_t b = topo_.branching;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        Layer& below = layers_[l];
        Layer& above = layers_[l + 1];
        while (below.hists.size() - above.covered_below >= b) {
            const auto start = static_cast<std::uint32_t>(above.covered_below);
            std::vector<const SparseHistogram*> kids(b);
            std::vector<std::uint32_t> child_slots(b);
            for (std::uint32_t i = 0; i < b; ++i) {
                kids[i] = &below.hists[start + i];
                child_slots[i] = start + i;
            }
            SparseHistogram parent = pool(std::span<const SparseHistogram* const>(kids),
                                          topo_.pooling);
            append_node(l + 1, std::move(parent), std::move(child_slots));
        }
    }
}

std::size_t HierIndex::top_layer() const {
    std::size_t top = 0;
    for (std::size_t l = layers_.size(); l-- > 0;) {
        if (!layers_[l].hists.empty()) {
            top = l;
            break;
        }
    }
    return top;
}

void HierIndex::score_layer(std::size_t layer, const SparseHistogram& q,
                            const std::vector<std::uint32_t>& candidates,
                            bool all_nodes, ScoreScratch& scratch,
                            std::vector<ScoredSlot>& out, std::uint64_t* ops) const {
    const Layer& L = layers_[layer];
    if (all_nodes) {
        score_all(L.index, q, scratch, out, ops);
        return;
    }
    std::uint64_t merge_cost = 0;
    for (std::uint32_t slot : candidates) {
        merge_cost += q.size() + L.hists[slot].size();
    }
    if (merge_cost <= L.index.posting_mass(q)) {
        out.clear();
        for (std::uint32_t slot : candidates) {
            const double score = merge_score(q, L.hists[slot], ops);
            if (score > 0.0) {
                out.push_back({slot, score});
            }
        }
    } else {
        score_filtered(L.index, q, candidates, scratch, out, ops);
    }
}

std::vector<std::uint32_t> HierIndex::descend(
        std::size_t layer, const std::vector<std::uint32_t>& retained) const {
    const Layer& L = layers_[layer];
    std::vector<std::uint32_t> next;
    for (std::uint32_t slot : retained) {
        const auto& kids = L.children[slot];
        next.insert(next.end(), kids.begin(), kids.end());
    }
    // nodes one layer down with no finalized parent
    const std::size_t below_size = layers_[layer - 1].hists.size();
    for (std::size_t s = L.covered_below; s < below_size; ++s) {
        next.push_back(static_cast<std::uint32_t>(s));
    }
    std::sort(next.begin(), next.end());
    return next;
}

std::vector<MatchResult> HierIndex::leaf_results(const std::vector<ScoredSlot>& scored,
                                                 double tau,
                                                 const LeafPredicate* exclude) const {
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

void HierIndex::set_layer_tau_scales(std::vector<double> scales) {
    if (scales.size() > layers_.size()) {
        throw std::invalid_argument("more threshold scales than layers");
    }
    for (double s : scales) {
        if (!(s > 0.0)) {
            throw std::invalid_argument("threshold scales must be positive");
        }
    }
    tau_scales_ = std::move(scales);
}

std::vector<MatchResult> HierIndex::query_threshold(const SparseHistogram& q, double tau,
                                                    const LeafPredicate* exclude,
                                                    ScoreScratch* scratch,
                                                    std::uint64_t* ops) const {
    if (tau < 0.0) {
        throw std::invalid_argument("threshold must be >= 0");
    }
    if (leaf_count() == 0) {
        return {};
    }
    ScoreScratch local;
    ScoreScratch& s = scratch ? *scratch : local;
    std::vector<ScoredSlot> scored;

    const std::size_t top = top_layer();
    score_layer(top, q, {}, /*all_nodes=*/true, s, scored, ops);
    for (std::size_t l = top; l > 0; --l) {
        const double layer_tau = tau * layer_tau_scale(l);
        std::vector<std::uint32_t> retained;
        retained.reserve(scored.size());
        for (const ScoredSlot& ss : scored) {
            if (ss.score >= layer_tau) {
                retained.push_back(ss.slot);
            }
        }
        // keep descending even when nothing was retained: lower layers can
        // still hold orphan nodes with no finalized parent
        const std::vector<std::uint32_t> cand = descend(l, retained);
        const bool all = cand.size() == layers_[l - 1].hists.size();
        score_layer(l - 1, q, cand, all, s, scored, ops);
    }
    return leaf_results(scored, tau * layer_tau_scale(0), exclude);
}

namespace {

// Top k slots by (score desc, slot asc), returned ascending.
std::vector<std::uint32_t> keep_topk(const std::vector<ScoredSlot>& scored,
                                     std::size_t k) {
    std::vector<ScoredSlot> best(scored);
    if (best.size() > k) {
        std::partial_sort(best.begin(), best.begin() + static_cast<std::ptrdiff_t>(k),
                          best.end(), [](const ScoredSlot& a, const ScoredSlot& b) {
                              if (a.score != b.score) return a.score > b.score;
                              return a.slot < b.slot;
                          });
        best.resize(k);
    }
    std::vector<std::uint32_t> slots;
    slots.reserve(best.size());
    for (const ScoredSlot& ss : best) slots.push_back(ss.slot);
    std::sort(slots.begin(), slots.end());
    return slots;
}

}  // namespace

std::vector<MatchResult> HierIndex::query_topk(const SparseHistogram& q,
                                               std::size_t k_keep, std::size_t k_return,
                                               const LeafPredicate* exclude,
                                               ScoreScratch* scratch,
                                               std::uint64_t* ops) const {
    if (k_keep < 1 || k_return < 1) {
        throw std::invalid_argument("top-k parameters must be >= 1");
    }
    if (leaf_count() == 0) {
        return {};
    }
    ScoreScratch local;
    ScoreScratch& s = scratch ? *scratch : local;
    std::vector<ScoredSlot> scored;

    const std::size_t top = top_layer();
    score_layer(top, q, {}, /*all_nodes=*/true, s, scored, ops);
    for (std::size_t l = top; l > 0; --l) {
        const std::vector<std::uint32_t> retained = keep_topk(scored, k_keep);
        const std::vector<std::uint32_t> cand = descend(l, retained);
        const bool all = cand.size() == layers_[l - 1].hists.size();
        score_layer(l - 1, q, cand, all, s, scored, ops);
    }
    std::vector<MatchResult> results = leaf_results(scored, 0.0, exclude);
    if (results.size() > k_return) {
        results.resize(k_return);
    }
    return results;
}

std::vector<LeafId> HierIndex::frontier() const {
    std::vector<LeafId> out;
    const std::size_t from =
            layers_.size() > 1 ? static_cast<std::size_t>(layers_[1].covered_below) : 0;
    for (std::size_t s = from; s < ids_.size(); ++s) {
        out.push_back(ids_[s]);
    }
    return out;
}

HierIndex HierIndex::build_grouped(std::vector<GroupedLeaf> leaves,
                                   GroupingStrategy strategy, std::size_t group_size,
                                   PoolingMode pooling, std::uint64_t seed,
                                   std::size_t vocab_size) {
    if (group_size < 2) {
        throw ConfigError("group size must be >= 2");
    }
    if (leaves.empty()) {
        throw std::invalid_argument("no leaves to group");
    }
    for (std::size_t i = 1; i < leaves.size(); ++i) {
        if (leaves[i].id <= leaves[i - 1].id) {
            throw std::invalid_argument("leaf ids must be strictly increasing");
        }
    }

    HierIndex idx(TreeTopology{3, static_cast<std::uint32_t>(group_size), pooling},
                  vocab_size);
    for (GroupedLeaf& leaf : leaves) {
        idx.ids_.push_back(leaf.id);
        LeafMeta meta;
        meta.timestamp = leaf.id;
        meta.label = leaf.label;
        idx.meta_.push_back(std::move(meta));
        idx.append_node(0, std::move(leaf.hist), {});
    }

    // layer 1: one node per label, ascending label
    std::map<std::uint32_t, std::vector<std::uint32_t>> by_label;
    for (std::uint32_t slot = 0; slot < idx.ids_.size(); ++slot) {
        by_label[*idx.meta_[slot].label].push_back(slot);
    }
    for (auto& [label, slots] : by_label) {
        std::vector<const SparseHistogram*> kids;
        kids.reserve(slots.size());
        for (std::uint32_t s : slots) kids.push_back(&idx.layers_[0].hists[s]);
        SparseHistogram parent =
                pool(std::span<const SparseHistogram* const>(kids), pooling);
        idx.append_node(1, std::move(parent), std::move(slots));
    }

    // layer 2: blocks of group_size over layer-1 nodes
    const auto g = static_cast<std::uint32_t>(idx.layers_[1].hists.size());
    std::vector<std::vector<std::uint32_t>> blocks;
    if (strategy == GroupingStrategy::kLabelThenRandom) {
        std::vector<std::uint32_t> order(g);
        for (std::uint32_t i = 0; i < g; ++i) order[i] = i;
        Rng rng(seed);
        rng.shuffle(order);
        for (std::size_t at = 0; at < order.size(); at += group_size) {
            const std::size_t end = std::min(at + group_size, order.size());
            blocks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                                order.begin() + static_cast<std::ptrdiff_t>(end));
        }
    } else {
        std::vector<bool> assigned(g, false);
        std::size_t remaining = g;
        while (remaining > 0) {
            std::uint32_t seed_slot = 0;
            while (assigned[seed_slot]) ++seed_slot;
            assigned[seed_slot] = true;
            --remaining;
            std::vector<ScoredSlot> affinities;
            for (std::uint32_t c = 0; c < g; ++c) {
                if (assigned[c]) continue;
                affinities.push_back(
                        {c, intersection(idx.layers_[1].hists[seed_slot],
                                         idx.layers_[1].hists[c])});
            }
            std::sort(affinities.begin(), affinities.end(),
                      [](const ScoredSlot& a, const ScoredSlot& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.slot < b.slot;
                      });
            std::vector<std::uint32_t> block{seed_slot};
            for (std::size_t i = 0; i + 1 < group_size && i < affinities.size(); ++i) {
                block.push_back(affinities[i].slot);
                assigned[affinities[i].slot] = true;
                --remaining;
            }
            blocks.push_back(std::move(block));
        }
    }
    for (auto& block : blocks) {
        std::sort(block.begin(), block.end());
        std::vector<const SparseHistogram*> kids;
        kids.reserve(block.size());
        for (std::uint32_t s : block) kids.push_back(&idx.layers_[1].hists[s]);
        SparseHistogram parent =
                pool(std::span<const SparseHistogram* const>(kids), pooling);
        idx.append_node(2, std::move(parent), std::move(block));
    }

    idx.sealed_ = true;
    return idx;
}

namespace {

constexpr std::uint32_t kIndexMagic = 0x48425749;  // "HBWI"
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw DataError("truncated index file");
    }
    return v;
}

void write_hist(std::ostream& out, const SparseHistogram& h) {
    write_pod(out, static_cast<std::uint8_t>(h.norm_state()));
    write_pod(out, static_cast<std::uint64_t>(h.size()));
    for (const auto& e : h.entries()) {
        write_pod(out, e.word);
        write_pod(out, e.weight);
    }
}

SparseHistogram read_hist(std::istream& in) {
    const auto state = static_cast<NormState>(read_pod<std::uint8_t>(in));
    const auto n = read_pod<std::uint64_t>(in);
    std::vector<SparseHistogram::Entry> entries;
    entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto word = read_pod<WordId>(in);
        const auto weight = read_pod<double>(in);
        entries.push_back({word, weight});
    }
    return SparseHistogram(std::move(entries), state);
}

}  // namespace

void HierIndex::save(std::ostream& out, std::uint64_t vocab_hash) const {
    write_pod(out, kIndexMagic);
    write_pod(out, kIndexVersion);
    write_pod(out, static_cast<std::uint8_t>(sealed_ ? 1 : 0));
    write_pod(out, static_cast<std::uint8_t>(topo_.pooling));
    write_pod(out, topo_.depth);
    write_pod(out, topo_.branching);
    write_pod(out, static_cast<std::uint64_t>(vocab_size_));
    write_pod(out, vocab_hash);

    write_pod(out, static_cast<std::uint64_t>(ids_.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        write_pod(out, ids_[i]);
        const LeafMeta& m = meta_[i];
        write_pod(out, m.timestamp);
        std::uint8_t flags = 0;
        if (m.pose) flags |= 1;
        if (m.label) flags |= 2;
        write_pod(out, flags);
        if (m.pose) {
            write_pod(out, m.pose->t);
            for (double v : m.pose->translation) write_pod(out, v);
            for (double v : m.pose->rotation) write_pod(out, v);
        }
        if (m.label) {
            write_pod(out, *m.label);
        }
    }

    write_pod(out, static_cast<std::uint32_t>(layers_.size()));
    for (const Layer& L : layers_) {
        write_pod(out, static_cast<std::uint64_t>(L.hists.size()));
        for (std::size_t s = 0; s < L.hists.size(); ++s) {
            write_hist(out, L.hists[s]);
            write_pod(out, static_cast<std::uint32_t>(L.children[s].size()));
            for (std::uint32_t c : L.children[s]) write_pod(out, c);
        }
    }
    if (!out) {
        throw DataError("failed to write index file");
    }
}

HierIndex HierIndex::load(std::istream& in, std::uint64_t* vocab_hash) {
    if (read_pod<std::uint32_t>(in) != kIndexMagic) {
        throw DataError("not an index file");
    }
    if (read_pod<std::uint32_t>(in) != kIndexVersion) {
        throw DataError("unsupported index file version");
    }
    const bool sealed = read_pod<std::uint8_t>(in) != 0;
    const auto pooling = static_cast<PoolingMode>(read_pod<std::uint8_t>(in));
    const auto depth = read_pod<std::uint32_t>(in);
    const auto branching = read_pod<std::uint32_t>(in);
    const auto vocab = read_pod<std::uint64_t>(in);
    const auto hash = read_pod<std::uint64_t>(in);
    if (vocab_hash) *vocab_hash = hash;

    HierIndex idx(TreeTopology{depth, branching, pooling},
                  static_cast<std::size_t>(vocab));

    const auto leaves = read_pod<std::uint64_t>(in);
    idx.ids_.reserve(leaves);
    idx.meta_.reserve(leaves);
    for (std::uint64_t i = 0; i < leaves; ++i) {
        idx.ids_.push_back(read_pod<LeafId>(in));
        LeafMeta m;
        m.timestamp = read_pod<std::int64_t>(in);
        const auto flags = read_pod<std::uint8_t>(in);
        if (flags & 1) {
            Pose p;
            p.t = read_pod<std::int64_t>(in);
            for (double& v : p.translation) v = read_pod<double>(in);
            for (double& v : p.rotation) v = read_pod<double>(in);
            m.pose = p;
        }
        if (flags & 2) {
            m.label = read_pod<std::uint32_t>(in);
        }
        idx.meta_.push_back(std::move(m));
    }

    const auto layer_count = read_pod<std::uint32_t>(in);
    if (layer_count != idx.layers_.size()) {
        throw DataError("index layer count does not match topology");
    }
    for (Layer& L : idx.layers_) {
        const auto nodes = read_pod<std::uint64_t>(in);
        for (std::uint64_t s = 0; s < nodes; ++s) {
            SparseHistogram h = read_hist(in);
            const auto nkids = read_pod<std::uint32_t>(in);
            std::vector<std::uint32_t> kids(nkids);
            for (auto& c : kids) c = read_pod<std::uint32_t>(in);
            idx.append_node(static_cast<std::size_t>(&L - idx.layers_.data()),
                            std::move(h), std::move(kids));
        }
    }
    if (idx.ids_.size() != idx.layers_[0].hists.size()) {
        throw DataError("leaf metadata does not match leaf layer");
    }
    idx.sealed_ = sealed;
    return idx;
}

std::vector<MatchResult> group_islands(std::vector<MatchResult> results,
                                       std::int64_t gap) {
    if (gap < 1) {
        throw std::invalid_argument("island gap must be >= 1");
    }
    if (results.empty()) {
        return results;
    }
    std::vector<std::size_t> order(results.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return results[a].leaf_id < results[b].leaf_id;
    });
    std::uint32_t island = 0;
    std::int64_t prev = static_cast<std::int64_t>(results[order[0]].leaf_id);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto id = static_cast<std::int64_t>(results[order[k]].leaf_id);
        if (k > 0 && id - prev > gap) {
            ++island;
        }
        results[order[k]].island_id = island;
        prev = id;
    }
    return results;
}

std::vector<MatchResult> island_representatives(const std::vector<MatchResult>& results) {
    std::map<std::uint32_t, MatchResult> best;
    for (const MatchResult& r : results) {
        if (!r.island_id) {
            throw std::invalid_argument("results lack island annotations");
        }
        auto [it, fresh] = best.emplace(*r.island_id, r);
        if (!fresh && match_order(r, it->second)) {
            it->second = r;
        }
    }
    std::vector<MatchResult> reps;
    reps.reserve(best.size());
    for (const auto& [island, rep] : best) {
        reps.push_back(rep);
    }
    std::sort(reps.begin(), reps.end(), match_order);
    return reps;
}

}  // namespace hibow
