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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hibow/hier_index.hpp"
#include "hibow/histogram.hpp"
#include "hibow/match.hpp"

namespace hibow {

/// Query timing source. kWall reads a monotonic clock; kOps charges a
/// deterministic cost model (posting entries visited plus merge lengths, one
/// nanosecond each), which makes benchmark outputs reproducible bit for bit.
enum class ClockMode : std::uint8_t { kWall, kOps };

const char* to_string(ClockMode mode);
ClockMode clock_from_string(const std::string& name);

/// Flat baseline or pooled hierarchy under test.
struct IndexSpec {
    bool hierarchical = false;
    TreeTopology topology;  // ignored when flat
    std::size_t vocab_size = 0;

    std::string label() const { return hierarchical ? topology.label() : "flat"; }
};

struct StreamFrame {
    LeafId id = 0;
    SparseHistogram hist;
    Pose pose;
};

struct LoopClosureProtocolConfig {
    double correct_radius_m = 15.0;
    std::int64_t min_temporal_gap = 10;
    double tau = 0.0;
    std::vector<double> threshold_sweep;
    int timing_repeats = 1;
    ClockMode clock = ClockMode::kWall;

    void validate() const;  // throws ConfigError
};

struct PRPoint {
    double tau = 0.0;
    double precision = 1.0;
    double recall = 1.0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
};

struct TimingSample {
    std::size_t db_size;
    double seconds;
};

struct TimingRecord {
    std::vector<TimingSample> samples;
    double rate_ms_per_1k = 0.0;  // least-squares slope, ms per 1000 images
    bool rate_clamped = false;
    double mean_seconds = 0.0;
    std::optional<double> speedup;  // baseline rate / this rate
};

/// OLS slope of seconds vs database size, scaled to ms per 1k images.
/// Negative slopes clamp to 0 (sets *clamped). Throws std::invalid_argument
/// when all sizes are equal or fewer than 2 samples are given.
double time_cost_rate(std::span<const TimingSample> samples, bool* clamped = nullptr);

struct LoopBenchResult {
    std::vector<PRPoint> pr;  // one point per sweep value, ascending tau
    TimingRecord timing;
};

/// Incremental loop-closure protocol: every frame first queries the database
/// (frames closer than min_temporal_gap excluded), then is inserted. Matches
/// are lumped into temporal islands (gap = min_temporal_gap) and counted per
/// island: an island with any member within correct_radius_m of the query is
/// a true positive, otherwise a false positive; a query with a reachable
/// ground-truth loop and no true-positive island is a false negative. Histograms must be tfidf-normalized and each frame carries its
/// pose. One scoring pass per frame at the smallest sweep threshold (or at
/// cfg.tau when the sweep is empty); the PR sweep reuses the cached matches.
LoopBenchResult run_loop_benchmark(std::span<const StreamFrame> stream,
                                   const IndexSpec& spec,
                                   const LoopClosureProtocolConfig& cfg);

struct CalibrationResult {
    double tau = 0.0;
    bool zero_fp_found = false;  // false -> fell back to the largest tau
};

/// Smallest sweep threshold with zero false positives; falls back to the
/// largest threshold when every point has false positives. Input must be
/// sorted by ascending tau.
CalibrationResult calibrate_threshold(std::span<const PRPoint> pr);

struct SynthQueryConfig {
    double tau = 0.0;
    std::size_t checkpoints = 10;
    int repeats = 3;
    ClockMode clock = ClockMode::kWall;
};

struct SynthQueryResult {
    TimingRecord positive;
    TimingRecord negative;
    TimingRecord overall;
};

/// Builds the database incrementally and times the positive/negative query
/// sets at evenly spaced checkpoints; per-query times are medians over
/// cfg.repeats runs. Query ids must be disjoint from database ids by
/// construction (the query histograms are standalone).
SynthQueryResult run_synthetic_queries(std::span<const StreamFrame> db,
                                       std::span<const SparseHistogram> positives,
                                       std::span<const SparseHistogram> negatives,
                                       const IndexSpec& spec,
                                       const SynthQueryConfig& cfg);

/// Fills speedup fields of `method` from the matching baseline rates.
void attach_speedups(const SynthQueryResult& baseline, SynthQueryResult& method);

// ---------------------------------------------------------------------------
// Synthetic datasets

/// Loop-closure dataset generator. Each frame samples words from a location
/// multinomial mixing a small pool of ubiquitous background words with a
/// location-specific word set that drifts along the trajectory. Scheduled
/// revisits reuse the original location's multinomial with each sampled word
/// independently replaced with probability word_replacement_prob, and land
/// within radius_m of the original pose; distinct locations stay at least
/// 3 * radius_m apart. Negative queries draw their specific words from a
/// reserved word-id range no database frame uses.
struct SynthConfig {
    std::size_t vocab_size = 1000;
    std::size_t seq_len = 2000;
    std::size_t words_per_frame = 50;
    std::vector<std::pair<std::int64_t, std::int64_t>> loop_schedule;  // (revisit, original)
    double word_replacement_prob = 0.1;
    std::uint64_t seed = 1;

    // generator texture
    std::size_t background_pool = 16;
    double background_fraction = 0.2;
    double location_drift = 0.25;
    std::size_t location_word_count = 40;
    double negative_range_fraction = 0.2;
    std::size_t negative_queries = 50;
    double radius_m = 15.0;
    bool record_supports = false;

    void validate() const;  // throws ConfigError
};

/// Evenly spaced revisit runs: `runs` runs of `run_length` consecutive
/// frames near the end of the sequence, each revisiting a stretch in the
/// first half.
std::vector<std::pair<std::int64_t, std::int64_t>> make_loop_schedule(
        std::size_t seq_len, std::size_t runs, std::size_t run_length);

struct SynthDataset {
    std::vector<StreamFrame> db;  // raw-count histograms
    std::vector<SparseHistogram> positive_queries;  // raw counts
    std::vector<std::int64_t> positive_targets;     // original frame per positive
    std::vector<SparseHistogram> negative_queries;  // raw counts
    std::vector<std::vector<WordId>> frame_supports;  // when record_supports
};

SynthDataset synth_generate(const SynthConfig& cfg);

/// Grouped retrieval dataset: `groups` word multinomials, `variants` noisy
/// samples each, labels = group ids.
struct GroupedSynthConfig {
    std::size_t groups = 500;
    std::size_t variants = 4;
    std::size_t vocab_size = 2000;
    std::size_t words_per_frame = 200;
    std::size_t group_word_count = 300;
    double word_replacement_prob = 0.1;
    std::uint64_t seed = 1;

    void validate() const;
};

struct GroupedDataset {
    std::vector<HierIndex::GroupedLeaf> leaves;  // raw-count histograms
};

GroupedDataset synth_generate_grouped(const GroupedSynthConfig& cfg);

// ---------------------------------------------------------------------------
// Retrieval protocol

struct RetrievalConfig {
    std::size_t topk_keep = 10;
    std::size_t topk_return = 4;
    bool exclude_self = false;
    bool map_metric = false;  // mean average precision instead of top-k hits
    int repeats = 3;
    ClockMode clock = ClockMode::kWall;
};

struct RetrievalResult {
    double mean_score = 0.0;  // top-k same-label hits per query, or mAP
    double mean_query_seconds = 0.0;
    std::size_t queries = 0;
};

/// Every leaf queries the database; score counts same-label results in the
/// top-k (the query itself stays in the database unless exclude_self).
RetrievalResult run_retrieval_flat(std::span<const HierIndex::GroupedLeaf> leaves,
                                   std::size_t vocab_size, const RetrievalConfig& cfg);
RetrievalResult run_retrieval_hier(const HierIndex& index,
                                   std::span<const HierIndex::GroupedLeaf> leaves,
                                   const RetrievalConfig& cfg);

/// Normalization helpers shared by the CLI and the benchmarks.
IdfTable idf_from_stream(std::span<const StreamFrame> frames, std::size_t vocab_size);
std::vector<StreamFrame> tfidf_stream(std::span<const StreamFrame> frames,
                                      const IdfTable& idf);
std::vector<SparseHistogram> tfidf_histograms(std::span<const SparseHistogram> hists,
                                              const IdfTable& idf);

}  // namespace hibow
