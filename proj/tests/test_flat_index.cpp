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

#include "hibow/flat_index.hpp"
#include "hibow/rng.hpp"
#include "oracles.hpp"

using namespace hibow;

TEST_CASE("inverted index posting lists grow per word") {
    InvertedIndex idx(8);
    idx.add(0, SparseHistogram({{1, 0.5}, {3, 0.5}}, NormState::kRawCounts));
    CHECK(idx.postings(1).size() == 1);
    CHECK(idx.postings(3).size() == 1);
    CHECK(idx.postings(0).empty());
    idx.add(1, SparseHistogram({{0, 1.0}, {2, 1.0}}, NormState::kRawCounts));
    // disjoint supports: no list longer than one
    for (WordId w = 0; w < 8; ++w) {
        CHECK(idx.postings(w).size() <= 1);
    }
    CHECK(idx.node_count() == 2);
    CHECK_THROWS_AS(idx.add(1, SparseHistogram({{0, 1.0}}, NormState::kRawCounts)),
                    std::invalid_argument);
}

TEST_CASE("self match of a normalized histogram scores 1") {
    Rng rng(5);
    FlatIndex index(64);
    const auto h = test::random_normalized_histogram(rng, 64, 12);
    index.insert(42, h);
    const auto res = index.query(h, 0.99);
    REQUIRE(res.size() == 1);
    CHECK(res[0].leaf_id == 42);
    CHECK(res[0].score == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("duplicate ids are rejected") {
    FlatIndex index(16);
    index.insert(7, SparseHistogram({{0, 1.0}}, NormState::kRawCounts));
    CHECK_THROWS_AS(index.insert(7, SparseHistogram({{1, 1.0}}, NormState::kRawCounts)),
                    std::invalid_argument);
}

TEST_CASE("threshold above the maximum score yields no results") {
    Rng rng(6);
    FlatIndex index(32);
    std::vector<std::pair<LeafId, SparseHistogram>> stored;
    for (LeafId id = 0; id < 20; ++id) {
        auto h = test::random_normalized_histogram(rng, 32, 8);
        index.insert(id, h);
        stored.emplace_back(id, std::move(h));
    }
    const auto q = test::random_normalized_histogram(rng, 32, 8);
    CHECK(index.query(q, 1.5).empty());
}

TEST_CASE("flat query equals the dense brute-force oracle") {
    Rng rng(7);
    FlatIndex index(48);
    std::vector<std::pair<LeafId, SparseHistogram>> stored;
    for (LeafId id = 0; id < 60; ++id) {
        auto h = test::random_histogram(rng, 48, 12);
        index.insert(id, h);
        stored.emplace_back(id, std::move(h));
    }
    for (int trial = 0; trial < 50; ++trial) {
        const auto q = test::random_histogram(rng, 48, 12);
        for (double tau : {0.0, 0.5, 1.0, 2.0}) {
            const auto got = index.query(q, tau);
            const auto want = test::brute_matches(stored, q, tau, 48);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].leaf_id == want[i].leaf_id);
                CHECK(got[i].score == doctest::Approx(want[i].score).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("exclusion predicate removes leaves from results") {
    Rng rng(8);
    FlatIndex index(32);
    const auto h = test::random_normalized_histogram(rng, 32, 10);
    index.insert(0, h);
    index.insert(1, h);
    const LeafPredicate drop_even = [](LeafId id) { return id % 2 == 0; };
    const auto res = index.query(h, 0.0, &drop_even);
    REQUIRE(res.size() == 1);
    CHECK(res[0].leaf_id == 1);
}

TEST_CASE("ties order by ascending id") {
    FlatIndex index(8);
    const SparseHistogram h({{0, 0.5}, {1, 0.5}}, NormState::kTfidfNormalized);
    index.insert(3, h);
    index.insert(1, h);
    index.insert(2, h);
    const auto res = index.query(h, 0.0);
    REQUIRE(res.size() == 3);
    CHECK(res[0].leaf_id == 1);
    CHECK(res[1].leaf_id == 2);
    CHECK(res[2].leaf_id == 3);
}

TEST_CASE("query_topk truncates the canonical ordering") {
    Rng rng(9);
    FlatIndex index(32);
    for (LeafId id = 0; id < 30; ++id) {
        index.insert(id, test::random_normalized_histogram(rng, 32, 10));
    }
    const auto q = test::random_normalized_histogram(rng, 32, 10);
    const auto all = index.query(q, 0.0);
    const auto top = index.query_topk(q, 5);
    REQUIRE(top.size() == std::min<std::size_t>(5, all.size()));
    for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i] == all[i]);
    }
}
