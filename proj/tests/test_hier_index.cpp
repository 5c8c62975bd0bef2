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

#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <sstream>
#include <thread>

#include "hibow/error.hpp"
#include "hibow/flat_index.hpp"
#include "hibow/hier_index.hpp"
#include "hibow/rng.hpp"
#include "oracles.hpp"

using namespace hibow;

namespace {

std::vector<SparseHistogram> random_leaves(Rng& rng, std::size_t n, std::size_t vocab,
                                           std::size_t max_words) {
    std::vector<SparseHistogram> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(test::random_normalized_histogram(rng, vocab, max_words));
    }
    return out;
}

HierIndex build_index(const std::vector<SparseHistogram>& leaves, TreeTopology topo,
                      std::size_t vocab) {
    HierIndex index(topo, vocab);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        index.insert(static_cast<LeafId>(i), leaves[i]);
    }
    return index;
}

bool same_results(const std::vector<MatchResult>& a, const std::vector<MatchResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].leaf_id != b[i].leaf_id) return false;
        if (std::memcmp(&a[i].score, &b[i].score, sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("eight inserts with depth 4, branching 2 fill 8/4/2/1") {
    Rng rng(3);
    const auto leaves = random_leaves(rng, 8, 64, 10);
    const auto index = build_index(leaves, {4, 2, PoolingMode::kMean}, 64);
    CHECK(index.layer_size(0) == 8);
    CHECK(index.layer_size(1) == 4);
    CHECK(index.layer_size(2) == 2);
    CHECK(index.layer_size(3) == 1);
    CHECK(index.frontier().empty());
}

TEST_CASE("seven inserts leave the last leaf on the frontier") {
    Rng rng(4);
    const auto leaves = random_leaves(rng, 7, 64, 10);
    const auto index = build_index(leaves, {4, 2, PoolingMode::kSum}, 64);
    CHECK(index.layer_size(1) == 3);
    CHECK(index.layer_size(2) == 1);
    CHECK(index.layer_size(3) == 0);
    CHECK(index.frontier() == std::vector<LeafId>{6});
}

TEST_CASE("a single insert stays on the frontier with empty upper layers") {
    Rng rng(5);
    const auto leaves = random_leaves(rng, 1, 64, 10);
    const auto index = build_index(leaves, {4, 2, PoolingMode::kMax}, 64);
    CHECK(index.layer_size(0) == 1);
    CHECK(index.layer_size(1) == 0);
    CHECK(index.frontier() == std::vector<LeafId>{0});
}

TEST_CASE("finalized node counts follow floor(T / b^l)") {
    Rng rng(6);
    for (const std::size_t T : {1u, 5u, 13u, 64u, 100u}) {
        for (const std::uint32_t b : {2u, 3u, 4u}) {
            const auto leaves = random_leaves(rng, T, 64, 8);
            const auto index = build_index(leaves, {3, b, PoolingMode::kMean}, 64);
            for (std::size_t l = 0; l < index.layer_count(); ++l) {
                std::size_t expect = T;
                for (std::size_t i = 0; i < l; ++i) expect /= b;
                CHECK(index.layer_size(l) == expect);
            }
        }
    }
}

TEST_CASE("pooled parents equal pool() of their children") {
    Rng rng(7);
    const auto leaves = random_leaves(rng, 27, 64, 10);
    for (auto mode : {PoolingMode::kMean, PoolingMode::kSum, PoolingMode::kMax}) {
        const auto index = build_index(leaves, {3, 3, mode}, 64);
        for (std::size_t l = 1; l < index.layer_count(); ++l) {
            for (std::uint32_t s = 0; s < index.layer_size(l); ++s) {
                std::vector<const SparseHistogram*> kids;
                for (std::uint32_t c : index.node_children(l, s)) {
                    kids.push_back(&index.node_histogram(l - 1, c));
                }
                CHECK(index.node_histogram(l, s) ==
                      pool(std::span<const SparseHistogram* const>(kids), mode));
            }
        }
    }
}

TEST_CASE("out-of-order leaf ids are rejected") {
    Rng rng(8);
    HierIndex index({2, 2, PoolingMode::kMean}, 32);
    index.insert(5, test::random_normalized_histogram(rng, 32, 8));
    CHECK_THROWS_AS(index.insert(5, test::random_normalized_histogram(rng, 32, 8)),
                    std::invalid_argument);
    CHECK_THROWS_AS(index.insert(3, test::random_normalized_histogram(rng, 32, 8)),
                    std::invalid_argument);
    index.insert(9, test::random_normalized_histogram(rng, 32, 8));
    CHECK(index.leaf_count() == 2);
}

TEST_CASE("depth-1 topology reproduces flat search byte for byte") {
    Rng rng(9);
    const auto leaves = random_leaves(rng, 80, 128, 14);
    FlatIndex flat(128);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        flat.insert(static_cast<LeafId>(i), leaves[i]);
    }
    for (auto mode : {PoolingMode::kMean, PoolingMode::kSum, PoolingMode::kMax}) {
        const auto hier = build_index(leaves, {1, 2, mode}, 128);
        for (int trial = 0; trial < 60; ++trial) {
            const auto q = test::random_normalized_histogram(rng, 128, 14);
            const double tau = rng.uniform(0.0, 0.4);
            CHECK(same_results(hier.query_threshold(q, tau), flat.query(q, tau)));
        }
    }
}

TEST_CASE("sum and max pooling return exactly the flat result set") {
    Rng rng(10);
    const auto leaves = random_leaves(rng, 200, 128, 12);
    FlatIndex flat(128);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        flat.insert(static_cast<LeafId>(i), leaves[i]);
    }
    for (auto mode : {PoolingMode::kSum, PoolingMode::kMax}) {
        for (const TreeTopology topo : {TreeTopology{2, 4, mode},
                                        TreeTopology{3, 4, mode},
                                        TreeTopology{4, 2, mode}}) {
            const auto hier = build_index(leaves, topo, 128);
            for (int trial = 0; trial < 30; ++trial) {
                const auto q = test::random_normalized_histogram(rng, 128, 12);
                for (double tau : {0.0, 0.02, 0.05, 0.1, 0.2, 0.4}) {
                    CHECK(same_results(hier.query_threshold(q, tau),
                                       flat.query(q, tau)));
                }
            }
        }
    }
}

TEST_CASE("mean pooling at tau 0 equals flat; higher tau yields a subset") {
    Rng rng(11);
    const auto leaves = random_leaves(rng, 150, 96, 12);
    FlatIndex flat(96);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        flat.insert(static_cast<LeafId>(i), leaves[i]);
    }
    const auto hier = build_index(leaves, {3, 4, PoolingMode::kMean}, 96);
    for (int trial = 0; trial < 40; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 96, 12);
        CHECK(same_results(hier.query_threshold(q, 0.0), flat.query(q, 0.0)));
        for (double tau : {0.05, 0.1, 0.2}) {
            const auto sub = hier.query_threshold(q, tau);
            const auto full = flat.query(q, tau);
            for (const MatchResult& m : sub) {
                const auto it = std::find_if(full.begin(), full.end(),
                                             [&](const MatchResult& f) {
                                                 return f.leaf_id == m.leaf_id;
                                             });
                REQUIRE(it != full.end());
                CHECK(it->score == m.score);
            }
        }
    }
}

TEST_CASE("threshold result sets shrink as tau grows") {
    Rng rng(12);
    const auto leaves = random_leaves(rng, 100, 96, 12);
    for (auto mode : {PoolingMode::kMean, PoolingMode::kSum, PoolingMode::kMax}) {
        const auto hier = build_index(leaves, {3, 3, mode}, 96);
        for (int trial = 0; trial < 20; ++trial) {
            const auto q = test::random_normalized_histogram(rng, 96, 12);
            std::vector<MatchResult> prev = hier.query_threshold(q, 0.0);
            for (double tau : {0.02, 0.05, 0.1, 0.2, 0.5}) {
                const auto cur = hier.query_threshold(q, tau);
                for (const MatchResult& m : cur) {
                    CHECK(std::count_if(prev.begin(), prev.end(),
                                        [&](const MatchResult& p) {
                                            return p.leaf_id == m.leaf_id &&
                                                   p.score == m.score;
                                        }) == 1);
                }
                prev = cur;
            }
        }
    }
}

TEST_CASE("every inserted leaf stays reachable regardless of fill") {
    Rng rng(13);
    for (const std::size_t T : {1u, 2u, 3u, 7u, 9u, 17u, 31u}) {
        const auto leaves = random_leaves(rng, T, 64, 10);
        // sum/max never prune below a child's score, so a self query at a
        // high threshold must reach its leaf through any fill state
        for (auto mode : {PoolingMode::kSum, PoolingMode::kMax}) {
            const auto index = build_index(leaves, {3, 4, mode}, 64);
            for (std::size_t i = 0; i < T; ++i) {
                const auto res = index.query_threshold(leaves[i], 0.9);
                CHECK(std::count_if(res.begin(), res.end(), [&](const MatchResult& m) {
                          return m.leaf_id == static_cast<LeafId>(i);
                      }) == 1);
            }
        }
        // mean pooling reaches everything at tau 0
        const auto index = build_index(leaves, {3, 4, PoolingMode::kMean}, 64);
        for (std::size_t i = 0; i < T; ++i) {
            const auto res = index.query_threshold(leaves[i], 0.0);
            CHECK(std::count_if(res.begin(), res.end(), [&](const MatchResult& m) {
                      return m.leaf_id == static_cast<LeafId>(i);
                  }) == 1);
        }
    }
}

TEST_CASE("identical query sequences give identical results") {
    Rng rng(14);
    const auto leaves = random_leaves(rng, 50, 64, 10);
    const auto a = build_index(leaves, {3, 2, PoolingMode::kMax}, 64);
    const auto b = build_index(leaves, {3, 2, PoolingMode::kMax}, 64);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 64, 10);
        CHECK(same_results(a.query_threshold(q, 0.05), b.query_threshold(q, 0.05)));
        CHECK(same_results(a.query_topk(q, 5, 3), b.query_topk(q, 5, 3)));
    }
}

TEST_CASE("top-k descent with generous k equals flat top-k") {
    Rng rng(15);
    const auto leaves = random_leaves(rng, 60, 64, 10);
    FlatIndex flat(64);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        flat.insert(static_cast<LeafId>(i), leaves[i]);
    }
    const auto hier = build_index(leaves, {3, 4, PoolingMode::kMean}, 64);
    for (int trial = 0; trial < 30; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 64, 10);
        CHECK(same_results(hier.query_topk(q, 100, 10), flat.query_topk(q, 10)));
    }
}

TEST_CASE("top-k returns a near-duplicate group intact") {
    Rng rng(16);
    const auto base = test::random_normalized_histogram(rng, 64, 12);
    std::vector<SparseHistogram> leaves(4, base);
    // pad with unrelated leaves
    for (int i = 0; i < 12; ++i) {
        leaves.push_back(test::random_normalized_histogram(rng, 64, 12));
    }
    const auto index = build_index(leaves, {2, 4, PoolingMode::kMean}, 64);
    const auto res = index.query_topk(base, 10, 4);
    REQUIRE(res.size() == 4);
    for (const MatchResult& m : res) {
        CHECK(m.leaf_id < 4);
    }
}

TEST_CASE("top-k with k_keep 1 follows the matching branch") {
    Rng rng(17);
    // two coherent blocks of four; the query matches the second block
    std::vector<SparseHistogram> leaves;
    const auto block_a = test::random_normalized_histogram(rng, 256, 20);
    const auto block_b = test::random_normalized_histogram(rng, 256, 20);
    for (int i = 0; i < 4; ++i) leaves.push_back(block_a);
    for (int i = 0; i < 4; ++i) leaves.push_back(block_b);
    const auto index = build_index(leaves, {2, 4, PoolingMode::kMean}, 256);
    const auto res = index.query_topk(block_b, 1, 4);
    REQUIRE(!res.empty());
    for (const MatchResult& m : res) {
        CHECK(m.leaf_id >= 4);
    }
}

TEST_CASE("grouped build pools labels then blocks") {
    Rng rng(18);
    std::vector<HierIndex::GroupedLeaf> leaves;
    for (std::uint32_t i = 0; i < 8; ++i) {
        leaves.push_back({i, test::random_normalized_histogram(rng, 64, 10), i / 4});
    }
    auto index = HierIndex::build_grouped(
            leaves, HierIndex::GroupingStrategy::kLabelThenRandom, 2,
            PoolingMode::kMean, 5, 64);
    CHECK(index.sealed());
    CHECK(index.layer_size(0) == 8);
    CHECK(index.layer_size(1) == 2);
    CHECK(index.layer_size(2) == 1);
    CHECK_THROWS_AS(index.insert(99, test::random_normalized_histogram(rng, 64, 10)),
                    std::logic_error);
}

TEST_CASE("random grouping is deterministic for a seed") {
    Rng rng(19);
    std::vector<HierIndex::GroupedLeaf> leaves;
    for (std::uint32_t i = 0; i < 40; ++i) {
        leaves.push_back({i, test::random_normalized_histogram(rng, 64, 10), i / 2});
    }
    const auto a = HierIndex::build_grouped(leaves,
                                            HierIndex::GroupingStrategy::kLabelThenRandom,
                                            4, PoolingMode::kSum, 77, 64);
    const auto b = HierIndex::build_grouped(leaves,
                                            HierIndex::GroupingStrategy::kLabelThenRandom,
                                            4, PoolingMode::kSum, 77, 64);
    REQUIRE(a.layer_size(2) == b.layer_size(2));
    for (std::uint32_t s = 0; s < a.layer_size(2); ++s) {
        CHECK(a.node_children(2, s) == b.node_children(2, s));
    }
}

TEST_CASE("greedy affinity grouping recovers well-separated clusters") {
    Rng rng(20);
    // labels 0..3 drawn from word block A, labels 4..7 from block B
    std::vector<HierIndex::GroupedLeaf> leaves;
    for (std::uint32_t label = 0; label < 8; ++label) {
        const WordId base = label < 4 ? 0 : 128;
        std::vector<std::pair<WordId, double>> counts;
        for (int j = 0; j < 12; ++j) {
            counts.emplace_back(base + static_cast<WordId>(rng.below(32)), 1.0);
        }
        auto h = SparseHistogram::from_counts(counts);
        std::vector<SparseHistogram::Entry> norm;
        for (const auto& e : h.entries()) {
            norm.push_back({e.word, e.weight / h.total_mass()});
        }
        leaves.push_back({label, SparseHistogram(std::move(norm),
                                                 NormState::kTfidfNormalized),
                          label});
    }
    const auto index = HierIndex::build_grouped(
            leaves, HierIndex::GroupingStrategy::kLabelThenGreedyAffinity, 4,
            PoolingMode::kMean, 0, 256);
    REQUIRE(index.layer_size(2) == 2);
    for (std::uint32_t s = 0; s < 2; ++s) {
        const auto& block = index.node_children(2, s);
        REQUIRE(block.size() == 4);
        const bool first_half = block[0] < 4;
        for (std::uint32_t member : block) {
            CHECK((member < 4) == first_half);
        }
    }
}

TEST_CASE("islands lump temporally adjacent matches") {
    std::vector<MatchResult> results{{10, 0.9, std::nullopt},
                                     {11, 0.8, std::nullopt},
                                     {40, 0.7, std::nullopt}};
    const auto annotated = group_islands(results, 2);
    REQUIRE(annotated.size() == 3);
    CHECK(*annotated[0].island_id == *annotated[1].island_id);
    CHECK(*annotated[2].island_id != *annotated[0].island_id);

    const auto reps = island_representatives(annotated);
    REQUIRE(reps.size() == 2);
    CHECK(reps[0].leaf_id == 10);
    CHECK(reps[0].score == 0.9);
    CHECK(reps[1].leaf_id == 40);
}

TEST_CASE("islands chain transitively") {
    std::vector<MatchResult> results{{1, 0.5, std::nullopt},
                                     {3, 0.6, std::nullopt},
                                     {5, 0.7, std::nullopt}};
    const auto annotated = group_islands(results, 2);
    for (const MatchResult& m : annotated) {
        CHECK(*m.island_id == 0);
    }
    CHECK(group_islands({}, 2).empty());
    CHECK_THROWS_AS(group_islands(results, 0), std::invalid_argument);
}

TEST_CASE("index save/load round-trips losslessly") {
    Rng rng(21);
    const auto leaves = random_leaves(rng, 23, 64, 10);
    HierIndex index({3, 3, PoolingMode::kMax}, 64);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        LeafMeta meta;
        meta.timestamp = static_cast<std::int64_t>(i);
        Pose pose;
        pose.t = static_cast<std::int64_t>(i);
        pose.translation = {static_cast<double>(i), 0.5, -1.0};
        meta.pose = pose;
        meta.label = static_cast<std::uint32_t>(i % 3);
        index.insert(static_cast<LeafId>(i), leaves[i], std::move(meta));
    }

    std::stringstream buffer;
    index.save(buffer, 0xfeedbeef);
    std::uint64_t hash = 0;
    const auto loaded = HierIndex::load(buffer, &hash);
    CHECK(hash == 0xfeedbeef);
    CHECK(loaded.leaf_count() == index.leaf_count());
    CHECK(loaded.frontier() == index.frontier());
    for (std::size_t l = 0; l < index.layer_count(); ++l) {
        REQUIRE(loaded.layer_size(l) == index.layer_size(l));
        for (std::uint32_t s = 0; s < index.layer_size(l); ++s) {
            CHECK(loaded.node_histogram(l, s) == index.node_histogram(l, s));
        }
    }
    CHECK(loaded.leaf_meta(4).pose->translation == index.leaf_meta(4).pose->translation);
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 64, 10);
        CHECK(same_results(loaded.query_threshold(q, 0.1),
                           index.query_threshold(q, 0.1)));
    }

    std::stringstream garbage("garbage");
    CHECK_THROWS_AS(HierIndex::load(garbage), DataError);
}

TEST_CASE("layer threshold scales default to the single global tau") {
    Rng rng(26);
    const auto leaves = random_leaves(rng, 64, 96, 12);
    auto scaled = build_index(leaves, {3, 4, PoolingMode::kMean}, 96);
    const auto plain = build_index(leaves, {3, 4, PoolingMode::kMean}, 96);
    scaled.set_layer_tau_scales({1.0, 1.0, 1.0});
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 96, 12);
        CHECK(same_results(scaled.query_threshold(q, 0.1),
                           plain.query_threshold(q, 0.1)));
    }
    // a stricter top layer can only remove results
    scaled.set_layer_tau_scales({1.0, 1.0, 3.0});
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = test::random_normalized_histogram(rng, 96, 12);
        const auto strict = scaled.query_threshold(q, 0.1);
        const auto base = plain.query_threshold(q, 0.1);
        for (const MatchResult& m : strict) {
            CHECK(std::count_if(base.begin(), base.end(), [&](const MatchResult& p) {
                      return p.leaf_id == m.leaf_id && p.score == m.score;
                  }) == 1);
        }
    }
    CHECK_THROWS_AS(scaled.set_layer_tau_scales({1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(scaled.set_layer_tau_scales({1.0, 1.0, 1.0, 1.0}),
                    std::invalid_argument);
}

TEST_CASE("concurrent readers see identical results") {
    Rng rng(27);
    const auto leaves = random_leaves(rng, 120, 96, 12);
    const auto index = build_index(leaves, {3, 4, PoolingMode::kSum}, 96);
    std::vector<SparseHistogram> queries;
    for (int i = 0; i < 16; ++i) {
        queries.push_back(test::random_normalized_histogram(rng, 96, 12));
    }
    std::vector<std::vector<MatchResult>> expected;
    for (const auto& q : queries) {
        expected.push_back(index.query_threshold(q, 0.05));
    }
    std::vector<char> thread_ok(4, 1);
    std::vector<std::thread> workers;
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&, t] {
            ScoreScratch scratch;  // one scratch per reader
            for (int round = 0; round < 50; ++round) {
                const std::size_t qi = (t + round) % queries.size();
                const auto got =
                        index.query_threshold(queries[qi], 0.05, nullptr, &scratch);
                if (!same_results(got, expected[qi])) {
                    thread_ok[t] = 0;
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    for (char ok : thread_ok) {
        CHECK(ok == 1);
    }
}

TEST_CASE("topology validation") {
    const TreeTopology no_depth{0, 2, PoolingMode::kMean};
    CHECK_THROWS_AS(no_depth.validate(), ConfigError);
    const TreeTopology no_branch{2, 1, PoolingMode::kMean};
    CHECK_THROWS_AS(no_branch.validate(), ConfigError);
    const TreeTopology ok{2, 8, PoolingMode::kSum};
    CHECK(ok.label() == "d2b8-sum");
}

TEST_CASE("rotation orthonormality check") {
    Pose p;
    CHECK(rotation_orthonormal(p));
    p.rotation = {1, 0, 0, 0, 1, 0, 0, 0, 2};
    CHECK(!rotation_orthonormal(p));
}
