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

#include "hibow/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <unordered_map>

#include "hibow/error.hpp"
#include "hibow/flat_index.hpp"
#include "hibow/rng.hpp"
#include "hibow/vocab.hpp"

namespace hibow {

const char* to_string(ClockMode mode) {
    return mode == ClockMode::kWall ? "wall" : "ops";
}

ClockMode clock_from_string(const std::string& name) {
    if (name == "wall") return ClockMode::kWall;
    if (name == "ops") return ClockMode::kOps;
    throw ConfigError("unknown clock mode: " + name);
}

void LoopClosureProtocolConfig::validate() const {
    if (correct_radius_m <= 0.0) {
        throw ConfigError("correctness radius must be positive");
    }
    if (min_temporal_gap < 1) {
        throw ConfigError("minimum temporal gap must be >= 1");
    }
    if (tau < 0.0) {
        throw ConfigError("threshold must be >= 0");
    }
    for (double t : threshold_sweep) {
        if (t < 0.0) {
            throw ConfigError("sweep thresholds must be >= 0");
        }
    }
    if (timing_repeats < 1) {
        throw ConfigError("timing repeats must be >= 1");
    }
}

namespace {

// Per-op charge of the deterministic cost clock, in seconds.
constexpr double kOpSeconds = 1e-9;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<TimingSample>& samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const TimingSample& s : samples) total += s.seconds;
    return total / static_cast<double>(samples.size());
}

bool two_distinct_sizes(const std::vector<TimingSample>& samples) {
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].db_size != samples[0].db_size) return true;
    }
    return false;
}

void finalize_record(TimingRecord& record) {
    record.mean_seconds = mean_of(record.samples);
    if (record.samples.size() >= 2 && two_distinct_sizes(record.samples)) {
        record.rate_ms_per_1k = time_cost_rate(record.samples, &record.rate_clamped);
    }
}

/// Flat or hierarchical database behind one insert/query surface.
class BenchIndex {
  public:
    explicit BenchIndex(const IndexSpec& spec) {
        if (spec.vocab_size == 0) {
            throw ConfigError("index vocabulary size must be set");
        }
        if (spec.hierarchical) {
            hier_.emplace(spec.topology, spec.vocab_size);
        } else {
            flat_.emplace(spec.vocab_size);
        }
    }

    void insert(LeafId id, const SparseHistogram& h, LeafMeta meta = {}) {
        if (flat_) {
            flat_->insert(id, h);
        } else {
            hier_->insert(id, h, std::move(meta));
        }
    }

    std::vector<MatchResult> query_threshold(const SparseHistogram& q, double tau,
                                             const LeafPredicate* exclude,
                                             std::uint64_t* ops) {
        if (flat_) return flat_->query(q, tau, exclude, &scratch_, ops);
        return hier_->query_threshold(q, tau, exclude, &scratch_, ops);
    }

    std::size_t size() const { return flat_ ? flat_->size() : hier_->leaf_count(); }

  private:
    std::optional<FlatIndex> flat_;
    std::optional<HierIndex> hier_;
    ScoreScratch scratch_;
};

template <typename Fn>
double timed_query(ClockMode clock, Fn&& fn) {
    if (clock == ClockMode::kOps) {
        std::uint64_t ops = 0;
        fn(&ops);
        return static_cast<double>(ops) * kOpSeconds;
    }
    const auto t0 = std::chrono::steady_clock::now();
    fn(nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

double time_cost_rate(std::span<const TimingSample> samples, bool* clamped) {
    if (clamped) *clamped = false;
    if (samples.size() < 2) {
        throw std::invalid_argument("need at least two timing samples");
    }
    double mean_x = 0.0, mean_y = 0.0;
    for (const TimingSample& s : samples) {
        mean_x += static_cast<double>(s.db_size);
        mean_y += s.seconds;
    }
    mean_x /= static_cast<double>(samples.size());
    mean_y /= static_cast<double>(samples.size());
    double sxx = 0.0, sxy = 0.0;
    for (const TimingSample& s : samples) {
        const double dx = static_cast<double>(s.db_size) - mean_x;
        sxx += dx * dx;
        sxy += dx * (s.seconds - mean_y);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("timing samples need at least two distinct sizes");
    }
    double rate = sxy / sxx * 1e6;  // s/image -> ms per 1k images
    if (rate < 0.0) {
        if (clamped) *clamped = true;
        rate = 0.0;
    }
    return rate;
}

CalibrationResult calibrate_threshold(std::span<const PRPoint> pr) {
    if (pr.empty()) {
        throw std::invalid_argument("empty precision-recall table");
    }
    for (std::size_t i = 1; i < pr.size(); ++i) {
        if (pr[i].tau < pr[i - 1].tau) {
            throw std::invalid_argument("precision-recall table must be sorted by tau");
        }
    }
    for (const PRPoint& p : pr) {
        if (p.fp == 0) {
            return {p.tau, true};
        }
    }
    return {pr.back().tau, false};
}

LoopBenchResult run_loop_benchmark(std::span<const StreamFrame> stream,
                                   const IndexSpec& spec,
                                   const LoopClosureProtocolConfig& cfg) {
    cfg.validate();
    for (std::size_t t = 1; t < stream.size(); ++t) {
        if (stream[t].id <= stream[t - 1].id) {
            throw DataError("stream frame ids must be strictly increasing");
        }
    }
    for (const StreamFrame& f : stream) {
        if (f.hist.norm_state() != NormState::kTfidfNormalized) {
            throw DataError("loop benchmark expects tfidf-normalized histograms");
        }
    }

    double tau_query = cfg.tau;
    std::vector<double> sweep(cfg.threshold_sweep);
    std::sort(sweep.begin(), sweep.end());
    if (!sweep.empty()) {
        tau_query = sweep.front();
    }

    const std::size_t T = stream.size();
    std::vector<std::vector<MatchResult>> cached(T);
    std::vector<std::vector<double>> times(
            static_cast<std::size_t>(cfg.timing_repeats), std::vector<double>(T, 0.0));

    for (int rep = 0; rep < cfg.timing_repeats; ++rep) {
        BenchIndex index(spec);
        for (std::size_t t = 0; t < T; ++t) {
            const StreamFrame& f = stream[t];
            const LeafPredicate exclude = [&](LeafId m) {
                const auto a = static_cast<std::int64_t>(f.id);
                const auto b = static_cast<std::int64_t>(m);
                return std::llabs(a - b) < cfg.min_temporal_gap;
            };
            std::vector<MatchResult> matches;
            const double secs = timed_query(cfg.clock, [&](std::uint64_t* ops) {
                matches = index.query_threshold(f.hist, tau_query, &exclude, ops);
            });
            times[static_cast<std::size_t>(rep)][t] = secs;
            if (rep == 0) {
                cached[t] = std::move(matches);
            }
            LeafMeta meta;
            meta.timestamp = static_cast<std::int64_t>(f.id);
            meta.pose = f.pose;
            index.insert(f.id, f.hist, std::move(meta));
        }
    }

    LoopBenchResult result;
    result.timing.samples.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> reps;
        reps.reserve(times.size());
        for (const auto& row : times) reps.push_back(row[t]);
        result.timing.samples.push_back({t, median(std::move(reps))});
    }
    finalize_record(result.timing);

    if (sweep.empty()) {
        return result;
    }

    // ground truth: does any reachable database frame close a loop for query t
    std::vector<char> has_loop(T, 0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < t; ++s) {
            const auto dt = static_cast<std::int64_t>(stream[t].id) -
                            static_cast<std::int64_t>(stream[s].id);
            if (dt < cfg.min_temporal_gap) continue;
            if (translation_distance(stream[t].pose, stream[s].pose) <=
                cfg.correct_radius_m) {
                has_loop[t] = 1;
                break;
            }
        }
    }
    std::unordered_map<LeafId, std::size_t> pos_of;
    pos_of.reserve(T);
    for (std::size_t t = 0; t < T; ++t) pos_of.emplace(stream[t].id, t);

    result.pr.reserve(sweep.size());
    for (double tau : sweep) {
        PRPoint point;
        point.tau = tau;
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<MatchResult> kept;
            for (const MatchResult& m : cached[t]) {
                if (m.score >= tau) kept.push_back(m);
            }
            bool hit = false;
            if (!kept.empty()) {
                // an island counts as one detection; it is correct when any
                // member lies within the radius
                const auto annotated =
                        group_islands(std::move(kept), cfg.min_temporal_gap);
                std::uint32_t island_count = 0;
                for (const MatchResult& m : annotated) {
                    island_count = std::max(island_count, *m.island_id + 1);
                }
                std::vector<char> correct(island_count, 0);
                for (const MatchResult& m : annotated) {
                    const std::size_t s = pos_of.at(m.leaf_id);
                    if (translation_distance(stream[t].pose, stream[s].pose) <=
                        cfg.correct_radius_m) {
                        correct[*m.island_id] = 1;
                    }
                }
                for (char c : correct) {
                    if (c) {
                        ++point.tp;
                        hit = true;
                    } else {
                        ++point.fp;
                    }
                }
            }
            if (has_loop[t] && !hit) {
                ++point.fn;
            }
        }
        point.precision = point.tp + point.fp
                                  ? static_cast<double>(point.tp) /
                                            static_cast<double>(point.tp + point.fp)
                                  : 1.0;
        point.recall = point.tp + point.fn
                               ? static_cast<double>(point.tp) /
                                         static_cast<double>(point.tp + point.fn)
                               : 1.0;
        result.pr.push_back(point);
    }
    return result;
}

SynthQueryResult run_synthetic_queries(std::span<const StreamFrame> db,
                                       std::span<const SparseHistogram> positives,
                                       std::span<const SparseHistogram> negatives,
                                       const IndexSpec& spec,
                                       const SynthQueryConfig& cfg) {
    if (db.empty()) {
        throw DataError("empty database stream");
    }
    if (cfg.checkpoints < 1) {
        throw ConfigError("need at least one checkpoint");
    }
    if (cfg.repeats < 1) {
        throw ConfigError("repeats must be >= 1");
    }

    std::vector<std::size_t> checkpoints;
    for (std::size_t i = 1; i <= cfg.checkpoints; ++i) {
        const std::size_t s = db.size() * i / cfg.checkpoints;
        if (s > 0 && (checkpoints.empty() || s != checkpoints.back())) {
            checkpoints.push_back(s);
        }
    }

    SynthQueryResult result;
    BenchIndex index(spec);
    std::size_t next = 0;
    std::vector<double> reps(static_cast<std::size_t>(cfg.repeats));
    for (std::size_t target : checkpoints) {
        while (next < target) {
            const StreamFrame& f = db[next];
            LeafMeta meta;
            meta.timestamp = static_cast<std::int64_t>(f.id);
            meta.pose = f.pose;
            index.insert(f.id, f.hist, std::move(meta));
            ++next;
        }
        const auto time_class = [&](std::span<const SparseHistogram> queries,
                                    TimingRecord& record) {
            for (const SparseHistogram& q : queries) {
                for (int r = 0; r < cfg.repeats; ++r) {
                    reps[static_cast<std::size_t>(r)] =
                            timed_query(cfg.clock, [&](std::uint64_t* ops) {
                                (void)index.query_threshold(q, cfg.tau, nullptr, ops);
                            });
                }
                record.samples.push_back({target, median(reps)});
            }
        };
        time_class(positives, result.positive);
        time_class(negatives, result.negative);
    }
    result.overall.samples = result.positive.samples;
    result.overall.samples.insert(result.overall.samples.end(),
                                  result.negative.samples.begin(),
                                  result.negative.samples.end());
    finalize_record(result.positive);
    finalize_record(result.negative);
    finalize_record(result.overall);
    return result;
}

namespace {

void attach_one(const TimingRecord& baseline, TimingRecord& method) {
    if (method.rate_ms_per_1k > 0.0) {
        method.speedup = baseline.rate_ms_per_1k / method.rate_ms_per_1k;
    } else if (baseline.rate_ms_per_1k > 0.0) {
        method.speedup = std::numeric_limits<double>::infinity();
    } else {
        method.speedup = 1.0;
    }
}

}  // namespace

void attach_speedups(const SynthQueryResult& baseline, SynthQueryResult& method) {
    attach_one(baseline.positive, method.positive);
    attach_one(baseline.negative, method.negative);
    attach_one(baseline.overall, method.overall);
}

// ---------------------------------------------------------------------------
// Synthetic datasets

void SynthConfig::validate() const {
    if (seq_len < 1) {
        throw ConfigError("sequence length must be >= 1");
    }
    if (words_per_frame < 1) {
        throw ConfigError("words per frame must be >= 1");
    }
    if (word_replacement_prob < 0.0 || word_replacement_prob > 1.0) {
        throw ConfigError("word replacement probability must be in [0, 1]");
    }
    if (location_drift < 0.0 || location_drift > 1.0) {
        throw ConfigError("location drift must be in [0, 1]");
    }
    if (background_fraction < 0.0 || background_fraction >= 1.0) {
        throw ConfigError("background fraction must be in [0, 1)");
    }
    if (background_pool < 1 || location_word_count < 1) {
        throw ConfigError("word pools must be nonempty");
    }
    if (negative_range_fraction < 0.0 || negative_range_fraction >= 1.0) {
        throw ConfigError("negative range fraction must be in [0, 1)");
    }
    if (radius_m <= 0.0) {
        throw ConfigError("radius must be positive");
    }
    if (vocab_size <= background_pool) {
        throw ConfigError("vocabulary too small for the background pool");
    }
    const std::size_t rest = vocab_size - background_pool;
    const auto neg = static_cast<std::size_t>(static_cast<double>(rest) *
                                              negative_range_fraction);
    const std::size_t loc = rest - neg;
    if (loc < 2 * location_word_count) {
        throw ConfigError("vocabulary too small for the location word range");
    }
    if (negative_queries > 0 && neg < 1) {
        throw ConfigError("vocabulary too small for the negative word range");
    }
    for (const auto& [revisit, original] : loop_schedule) {
        if (original < 0 || original >= revisit ||
            revisit >= static_cast<std::int64_t>(seq_len)) {
            throw ConfigError("loop schedule entries must satisfy 0 <= original < revisit < length");
        }
    }
}

std::vector<std::pair<std::int64_t, std::int64_t>> make_loop_schedule(
        std::size_t seq_len, std::size_t runs, std::size_t run_length) {
    std::vector<std::pair<std::int64_t, std::int64_t>> schedule;
    if (runs == 0 || run_length == 0) {
        return schedule;
    }
    const std::size_t third = seq_len / 3;
    if (third / (runs + 1) < run_length || 2 * third + runs * (third / runs) > seq_len) {
        throw ConfigError("sequence too short for the requested loop schedule");
    }
    for (std::size_t r = 0; r < runs; ++r) {
        const std::size_t orig = (r + 1) * (third / (runs + 1));
        const std::size_t revisit = 2 * third + r * (third / runs);
        for (std::size_t i = 0; i < run_length; ++i) {
            schedule.emplace_back(static_cast<std::int64_t>(revisit + i),
                                  static_cast<std::int64_t>(orig + i));
        }
    }
    return schedule;
}

SynthDataset synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    const std::size_t bg_n = cfg.background_pool;
    const std::size_t rest = cfg.vocab_size - bg_n;
    const auto neg_n = static_cast<std::size_t>(static_cast<double>(rest) *
                                                cfg.negative_range_fraction);
    const std::size_t loc_n = rest - neg_n;
    const WordId loc_lo = static_cast<WordId>(bg_n);
    const WordId neg_lo = static_cast<WordId>(bg_n + loc_n);

    std::unordered_map<std::int64_t, std::int64_t> revisit_of;
    for (const auto& [revisit, original] : cfg.loop_schedule) {
        revisit_of[revisit] = original;
    }

    const std::size_t L = cfg.location_word_count;
    std::vector<WordId> chain;
    chain.reserve(L);
    std::vector<char> in_chain(loc_n, 0);
    while (chain.size() < L) {
        const auto w = static_cast<WordId>(loc_lo + rng.below(loc_n));
        if (!in_chain[w - loc_lo]) {
            in_chain[w - loc_lo] = 1;
            chain.push_back(w);
        }
    }
    const auto drift_count =
            static_cast<std::size_t>(std::llround(static_cast<double>(L) * cfg.location_drift));

    const double spacing = 3.0 * cfg.radius_m;
    const double jitter = cfg.radius_m / 3.0;

    SynthDataset data;
    data.db.reserve(cfg.seq_len);
    std::vector<std::vector<WordId>> supports(cfg.seq_len);
    std::vector<Pose> poses(cfg.seq_len);

    const auto sample_frame = [&](const std::vector<WordId>& support,
                                  bool with_replacement) {
        std::vector<std::pair<WordId, double>> counts;
        counts.reserve(cfg.words_per_frame);
        for (std::size_t j = 0; j < cfg.words_per_frame; ++j) {
            WordId w;
            if (rng.uniform01() < cfg.background_fraction) {
                w = static_cast<WordId>(rng.below(bg_n));
            } else {
                w = support[rng.below(support.size())];
            }
            if (with_replacement && rng.uniform01() < cfg.word_replacement_prob) {
                w = static_cast<WordId>(loc_lo + rng.below(loc_n));
            }
            counts.emplace_back(w, 1.0);
        }
        return SparseHistogram::from_counts(counts);
    };

    std::size_t location_step = 0;
    for (std::size_t t = 0; t < cfg.seq_len; ++t) {
        const auto rv = revisit_of.find(static_cast<std::int64_t>(t));
        if (rv != revisit_of.end()) {
            const auto orig = static_cast<std::size_t>(rv->second);
            supports[t] = supports[orig];
            Pose pose = poses[orig];
            pose.t = static_cast<std::int64_t>(t);
            pose.translation[0] += rng.uniform(-jitter, jitter);
            pose.translation[1] += rng.uniform(-jitter, jitter);
            poses[t] = pose;
            data.db.push_back({static_cast<LeafId>(t),
                               sample_frame(supports[t], true), poses[t]});
        } else {
            if (t > 0) {
                for (std::size_t i = 0; i < drift_count; ++i) {
                    const std::size_t pos = static_cast<std::size_t>(rng.below(L));
                    in_chain[chain[pos] - loc_lo] = 0;
                    WordId w;
                    do {
                        w = static_cast<WordId>(loc_lo + rng.below(loc_n));
                    } while (in_chain[w - loc_lo]);
                    in_chain[w - loc_lo] = 1;
                    chain[pos] = w;
                }
            }
            supports[t] = chain;
            Pose pose;
            pose.t = static_cast<std::int64_t>(t);
            pose.translation[0] = static_cast<double>(location_step) * spacing;
            ++location_step;
            poses[t] = pose;
            data.db.push_back({static_cast<LeafId>(t),
                               sample_frame(supports[t], false), poses[t]});
        }
    }

    data.positive_queries.reserve(cfg.loop_schedule.size());
    for (const auto& [revisit, original] : cfg.loop_schedule) {
        const auto orig = static_cast<std::size_t>(original);
        data.positive_queries.push_back(sample_frame(supports[orig], true));
        data.positive_targets.push_back(original);
    }

    std::vector<WordId> neg_support(neg_n);
    for (std::size_t i = 0; i < neg_n; ++i) {
        neg_support[i] = static_cast<WordId>(neg_lo + i);
    }
    data.negative_queries.reserve(cfg.negative_queries);
    for (std::size_t i = 0; i < cfg.negative_queries; ++i) {
        data.negative_queries.push_back(sample_frame(neg_support, false));
    }

    if (cfg.record_supports) {
        data.frame_supports = std::move(supports);
    }
    return data;
}

void GroupedSynthConfig::validate() const {
    if (groups < 1 || variants < 1) {
        throw ConfigError("need at least one group and one variant");
    }
    if (words_per_frame < 1) {
        throw ConfigError("words per frame must be >= 1");
    }
    if (word_replacement_prob < 0.0 || word_replacement_prob > 1.0) {
        throw ConfigError("word replacement probability must be in [0, 1]");
    }
    if (vocab_size < 2 * group_word_count || group_word_count < 1) {
        throw ConfigError("vocabulary too small for the group word count");
    }
}

GroupedDataset synth_generate_grouped(const GroupedSynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    GroupedDataset data;
    data.leaves.reserve(cfg.groups * cfg.variants);
    std::vector<char> used(cfg.vocab_size, 0);
    std::vector<WordId> group_words;
    group_words.reserve(cfg.group_word_count);
    for (std::size_t g = 0; g < cfg.groups; ++g) {
        group_words.clear();
        while (group_words.size() < cfg.group_word_count) {
            const auto w = static_cast<WordId>(rng.below(cfg.vocab_size));
            if (!used[w]) {
                used[w] = 1;
                group_words.push_back(w);
            }
        }
        for (WordId w : group_words) used[w] = 0;
        for (std::size_t v = 0; v < cfg.variants; ++v) {
            std::vector<std::pair<WordId, double>> counts;
            counts.reserve(cfg.words_per_frame);
            for (std::size_t j = 0; j < cfg.words_per_frame; ++j) {
                WordId w = group_words[rng.below(group_words.size())];
                if (rng.uniform01() < cfg.word_replacement_prob) {
                    w = static_cast<WordId>(rng.below(cfg.vocab_size));
                }
                counts.emplace_back(w, 1.0);
            }
            data.leaves.push_back({static_cast<LeafId>(g * cfg.variants + v),
                                   SparseHistogram::from_counts(counts),
                                   static_cast<std::uint32_t>(g)});
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Retrieval protocol

namespace {

struct RetrievalTotals {
    double score_sum = 0.0;
    double time_sum = 0.0;
    std::size_t queries = 0;
};

double average_precision(const std::vector<MatchResult>& ranked,
                         const std::unordered_map<LeafId, std::uint32_t>& labels,
                         std::uint32_t want, std::size_t relevant_total) {
    if (relevant_total == 0) return 0.0;
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (labels.at(ranked[i].leaf_id) == want) {
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return ap / static_cast<double>(relevant_total);
}

RetrievalResult finish(const RetrievalTotals& totals) {
    RetrievalResult r;
    r.queries = totals.queries;
    if (totals.queries > 0) {
        r.mean_score = totals.score_sum / static_cast<double>(totals.queries);
        r.mean_query_seconds = totals.time_sum / static_cast<double>(totals.queries);
    }
    return r;
}

template <typename QueryFn>
RetrievalResult run_retrieval(std::span<const HierIndex::GroupedLeaf> leaves,
                              const RetrievalConfig& cfg, QueryFn&& run_query) {
    std::unordered_map<LeafId, std::uint32_t> labels;
    std::unordered_map<std::uint32_t, std::size_t> group_sizes;
    labels.reserve(leaves.size());
    for (const auto& leaf : leaves) {
        labels.emplace(leaf.id, leaf.label);
        ++group_sizes[leaf.label];
    }

    const bool exclude_self = cfg.exclude_self || cfg.map_metric;
    RetrievalTotals totals;
    std::vector<double> reps(static_cast<std::size_t>(std::max(cfg.repeats, 1)));
    for (const auto& leaf : leaves) {
        const LeafPredicate self = [&](LeafId id) { return id == leaf.id; };
        const LeafPredicate* exclude = exclude_self ? &self : nullptr;
        std::vector<MatchResult> ranked;
        for (std::size_t r = 0; r < reps.size(); ++r) {
            reps[r] = timed_query(cfg.clock, [&](std::uint64_t* ops) {
                ranked = run_query(leaf.hist, exclude, ops);
            });
        }
        totals.time_sum += median(reps);
        if (cfg.map_metric) {
            std::size_t relevant = group_sizes.at(leaf.label) - 1;  // self excluded
            totals.score_sum += average_precision(ranked, labels, leaf.label, relevant);
        } else {
            double hits = 0.0;
            for (const MatchResult& m : ranked) {
                if (labels.at(m.leaf_id) == leaf.label) hits += 1.0;
            }
            totals.score_sum += hits;
        }
        ++totals.queries;
    }
    return finish(totals);
}

}  // namespace

RetrievalResult run_retrieval_flat(std::span<const HierIndex::GroupedLeaf> leaves,
                                   std::size_t vocab_size, const RetrievalConfig& cfg) {
    FlatIndex index(vocab_size);
    for (const auto& leaf : leaves) {
        index.insert(leaf.id, leaf.hist);
    }
    ScoreScratch scratch;
    const std::size_t k = cfg.map_metric ? leaves.size() : cfg.topk_return;
    return run_retrieval(leaves, cfg,
                         [&](const SparseHistogram& q, const LeafPredicate* exclude,
                             std::uint64_t* ops) {
                             return index.query_topk(q, k, exclude, &scratch, ops);
                         });
}

RetrievalResult run_retrieval_hier(const HierIndex& index,
                                   std::span<const HierIndex::GroupedLeaf> leaves,
                                   const RetrievalConfig& cfg) {
    ScoreScratch scratch;
    const std::size_t k = cfg.map_metric ? leaves.size() : cfg.topk_return;
    return run_retrieval(leaves, cfg,
                         [&](const SparseHistogram& q, const LeafPredicate* exclude,
                             std::uint64_t* ops) {
                             return index.query_topk(q, cfg.topk_keep, k, exclude,
                                                     &scratch, ops);
                         });
}

IdfTable idf_from_stream(std::span<const StreamFrame> frames, std::size_t vocab_size) {
    std::vector<SparseHistogram> corpus;
    corpus.reserve(frames.size());
    for (const StreamFrame& f : frames) corpus.push_back(f.hist);
    return compute_idf(corpus, vocab_size);
}

std::vector<StreamFrame> tfidf_stream(std::span<const StreamFrame> frames,
                                      const IdfTable& idf) {
    std::vector<StreamFrame> out;
    out.reserve(frames.size());
    for (const StreamFrame& f : frames) {
        out.push_back({f.id, tfidf_normalize(f.hist, idf), f.pose});
    }
    return out;
}

std::vector<SparseHistogram> tfidf_histograms(std::span<const SparseHistogram> hists,
                                              const IdfTable& idf) {
    std::vector<SparseHistogram> out;
    out.reserve(hists.size());
    for (const SparseHistogram& h : hists) {
        out.push_back(tfidf_normalize(h, idf));
    }
    return out;
}

}  // namespace hibow
