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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hibow/bench.hpp"
#include "hibow/error.hpp"
#include "hibow/flat_index.hpp"
#include "hibow/hier_index.hpp"
#include "hibow/io.hpp"
#include "hibow/vocab.hpp"

namespace fs = std::filesystem;
using namespace hibow;

namespace {

using Config = std::vector<std::pair<std::string, std::string>>;

std::vector<double> parse_sweep(const std::string& text) {
    // a:b:step
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ConfigError("sweep must be <start>:<stop>:<step>");
    }
    double a = 0, b = 0, step = 0;
    try {
        a = std::stod(text.substr(0, c1));
        b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(text.substr(c2 + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad sweep: " + text);
    }
    if (step <= 0 || b < a || a < 0) {
        throw ConfigError("sweep needs start >= 0, stop >= start, step > 0");
    }
    std::vector<double> values;
    for (double v = a; v <= b + 1e-12; v += step) {
        values.push_back(v);
    }
    return values;
}

std::size_t vocab_size_of(std::span<const std::pair<LeafId, SparseHistogram>> frames,
                          std::size_t override_size) {
    if (override_size > 0) {
        return override_size;
    }
    WordId max_word = 0;
    for (const auto& [id, hist] : frames) {
        if (!hist.empty()) {
            max_word = std::max(max_word, hist.entries().back().word);
        }
    }
    return static_cast<std::size_t>(max_word) + 1;
}

std::string fmt_speedup(const std::optional<double>& s) {
    if (!s) return "n/a";
    if (std::isinf(*s)) return "inf";
    return CsvReport::format_fixed(*s, 2);
}

void write_timing_csv(const fs::path& path, const std::string& command,
                      const Config& config, const TimingRecord& record) {
    CsvReport csv(command, config);
    csv.set_columns({"db_size", "seconds"});
    for (const TimingSample& s : record.samples) {
        csv.add_row({std::to_string(s.db_size), CsvReport::format(s.seconds)});
    }
    csv.write(path);
}

void write_pr_csv(const fs::path& path, const std::string& command,
                  const Config& config, const std::vector<PRPoint>& pr) {
    CsvReport csv(command, config);
    csv.set_columns({"tau", "precision", "recall", "tp", "fp", "fn"});
    for (const PRPoint& p : pr) {
        csv.add_row({CsvReport::format(p.tau), CsvReport::format_fixed(p.precision, 6),
                     CsvReport::format_fixed(p.recall, 6), std::to_string(p.tp),
                     std::to_string(p.fp), std::to_string(p.fn)});
    }
    csv.write(path);
}

// ---------------------------------------------------------------------------

struct VocabBuildArgs {
    std::string descriptor_file;
    std::uint32_t branching = 10;
    std::uint32_t depth = 3;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_vocab_build(const VocabBuildArgs& args) {
    const auto descriptors = read_descriptor_file(args.descriptor_file);
    if (descriptors.empty()) {
        throw DataError("no descriptors in " + args.descriptor_file);
    }
    const VocabularyTree tree =
            build_vocab(descriptors, args.branching, args.depth, args.seed);
    save_vocab_file(args.out, tree);
    std::printf("vocabulary: %zu words (branching %u, depth %u) -> %s\n",
                tree.word_count(), args.branching, args.depth, args.out.c_str());
    return 0;
}

struct QuantizeArgs {
    std::string vocab_file;
    std::vector<std::string> frame_files;
    std::string out;
    bool update_idf = false;
};

int cmd_quantize(const QuantizeArgs& args) {
    VocabularyTree tree = load_vocab_file(args.vocab_file);
    std::vector<std::pair<LeafId, SparseHistogram>> frames;
    for (std::size_t i = 0; i < args.frame_files.size(); ++i) {
        const auto descriptors = read_descriptor_file(args.frame_files[i]);
        frames.emplace_back(static_cast<LeafId>(i), quantize(descriptors, tree));
    }
    write_bow_file(args.out, frames);
    if (args.update_idf) {
        std::vector<SparseHistogram> corpus;
        corpus.reserve(frames.size());
        for (const auto& [id, hist] : frames) corpus.push_back(hist);
        tree.set_idf(compute_idf(corpus, tree.word_count()));
        save_vocab_file(args.vocab_file, tree);
    }
    std::printf("quantized %zu frames -> %s\n", frames.size(), args.out.c_str());
    return 0;
}

struct SynthArgs {
    std::string mode = "loop";
    std::string out_dir;
    std::uint64_t seed = 1;
    std::size_t vocab_size = 1000;
    std::size_t frames = 2000;
    std::size_t words_per_frame = 50;
    std::size_t loops = 40;
    std::size_t loop_len = 5;
    double rho = 0.1;
    std::size_t negatives = 50;
    std::size_t groups = 500;
    std::size_t variants = 4;
};

int cmd_synth_gen(const SynthArgs& args) {
    const fs::path dir(args.out_dir);
    Config config{{"mode", args.mode},
                  {"seed", std::to_string(args.seed)},
                  {"vocab-size", std::to_string(args.vocab_size)}};
    if (args.mode == "loop") {
        SynthConfig cfg;
        cfg.vocab_size = args.vocab_size;
        cfg.seq_len = args.frames;
        cfg.words_per_frame = args.words_per_frame;
        cfg.word_replacement_prob = args.rho;
        cfg.seed = args.seed;
        cfg.negative_queries = args.negatives;
        cfg.loop_schedule = make_loop_schedule(args.frames, args.loops, args.loop_len);
        const SynthDataset data = synth_generate(cfg);

        std::vector<std::pair<LeafId, SparseHistogram>> frames;
        std::vector<Pose> poses;
        for (const StreamFrame& f : data.db) {
            frames.emplace_back(f.id, f.hist);
            poses.push_back(f.pose);
        }
        write_bow_file(dir / "frames.bow", frames);
        write_pose_file(dir / "poses.txt", poses);
        std::vector<std::pair<LeafId, SparseHistogram>> pos, neg;
        for (std::size_t i = 0; i < data.positive_queries.size(); ++i) {
            pos.emplace_back(static_cast<LeafId>(i), data.positive_queries[i]);
        }
        for (std::size_t i = 0; i < data.negative_queries.size(); ++i) {
            neg.emplace_back(static_cast<LeafId>(i), data.negative_queries[i]);
        }
        write_bow_file(dir / "queries_pos.bow", pos);
        write_bow_file(dir / "queries_neg.bow", neg);

        config.emplace_back("frames", std::to_string(args.frames));
        config.emplace_back("words-per-frame", std::to_string(args.words_per_frame));
        config.emplace_back("loops", std::to_string(args.loops));
        config.emplace_back("loop-len", std::to_string(args.loop_len));
        config.emplace_back("rho", CsvReport::format(args.rho));
        config.emplace_back("negatives", std::to_string(args.negatives));
        CsvReport manifest("synth-gen", config);
        manifest.set_columns({"file", "records"});
        manifest.add_row({"frames.bow", std::to_string(frames.size())});
        manifest.add_row({"poses.txt", std::to_string(poses.size())});
        manifest.add_row({"queries_pos.bow", std::to_string(pos.size())});
        manifest.add_row({"queries_neg.bow", std::to_string(neg.size())});
        manifest.write(dir / "manifest.csv");
        std::printf("loop dataset: %zu frames, %zu positives, %zu negatives -> %s\n",
                    frames.size(), pos.size(), neg.size(), dir.string().c_str());
    } else if (args.mode == "grouped") {
        GroupedSynthConfig cfg;
        cfg.groups = args.groups;
        cfg.variants = args.variants;
        cfg.vocab_size = args.vocab_size;
        cfg.words_per_frame = args.words_per_frame;
        cfg.word_replacement_prob = args.rho;
        cfg.seed = args.seed;
        const GroupedDataset data = synth_generate_grouped(cfg);
        std::vector<std::pair<LeafId, SparseHistogram>> frames;
        std::vector<std::pair<LeafId, std::uint32_t>> labels;
        for (const auto& leaf : data.leaves) {
            frames.emplace_back(leaf.id, leaf.hist);
            labels.emplace_back(leaf.id, leaf.label);
        }
        write_bow_file(dir / "frames.bow", frames);
        write_labels_file(dir / "labels.txt", labels);

        config.emplace_back("groups", std::to_string(args.groups));
        config.emplace_back("variants", std::to_string(args.variants));
        config.emplace_back("words-per-frame", std::to_string(args.words_per_frame));
        config.emplace_back("rho", CsvReport::format(args.rho));
        CsvReport manifest("synth-gen", config);
        manifest.set_columns({"file", "records"});
        manifest.add_row({"frames.bow", std::to_string(frames.size())});
        manifest.add_row({"labels.txt", std::to_string(labels.size())});
        manifest.write(dir / "manifest.csv");
        std::printf("grouped dataset: %zu groups x %zu variants -> %s\n", args.groups,
                    args.variants, dir.string().c_str());
    } else {
        throw ConfigError("unknown mode: " + args.mode);
    }
    return 0;
}

struct BenchLoopArgs {
    std::string bow_file;
    std::string pose_file;
    std::uint32_t depth = 2;
    std::uint32_t branching = 8;
    std::string pooling = "mean";
    double tau = 0.0;
    std::string sweep = "0:0.6:0.03";
    std::int64_t min_gap = 10;
    double radius_m = 15.0;
    int repeats = 3;
    std::string clock = "wall";
    std::size_t vocab_size = 0;
    std::string out_dir;
};

int cmd_bench_loop(const BenchLoopArgs& args) {
    const auto raw = read_bow_file(args.bow_file);
    const auto poses = read_pose_file(args.pose_file);
    if (raw.size() != poses.size()) {
        throw DataError("frame count mismatch: " + std::to_string(raw.size()) +
                        " histograms vs " + std::to_string(poses.size()) + " poses");
    }
    if (raw.empty()) {
        throw DataError("empty dataset");
    }
    const std::size_t vocab = vocab_size_of(raw, args.vocab_size);

    std::vector<StreamFrame> stream;
    stream.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        stream.push_back({raw[i].first, raw[i].second, poses[i]});
    }
    const IdfTable idf = idf_from_stream(stream, vocab);
    const std::vector<StreamFrame> frames = tfidf_stream(stream, idf);

    LoopClosureProtocolConfig cfg;
    cfg.correct_radius_m = args.radius_m;
    cfg.min_temporal_gap = args.min_gap;
    cfg.tau = args.tau;
    cfg.threshold_sweep = parse_sweep(args.sweep);
    cfg.timing_repeats = args.repeats;
    cfg.clock = clock_from_string(args.clock);

    TreeTopology topo{args.depth, args.branching, pooling_from_string(args.pooling)};
    topo.validate();
    const IndexSpec flat_spec{false, {}, vocab};
    const IndexSpec hier_spec{true, topo, vocab};

    Config config{{"bow", args.bow_file},
                  {"poses", args.pose_file},
                  {"depth", std::to_string(args.depth)},
                  {"branching", std::to_string(args.branching)},
                  {"pooling", args.pooling},
                  {"tau", CsvReport::format(args.tau)},
                  {"tau-sweep", args.sweep},
                  {"min-gap", std::to_string(args.min_gap)},
                  {"radius-m", CsvReport::format(args.radius_m)},
                  {"repeats", std::to_string(args.repeats)},
                  {"clock", args.clock},
                  {"vocab-size", std::to_string(vocab)}};

    const fs::path dir(args.out_dir);
    CsvReport summary("bench-loop", config);
    summary.set_columns({"structure", "pooling", "rate_ms_per_1k", "speedup",
                         "calibrated_tau", "precision", "recall"});

    double flat_rate = 0.0;
    for (const IndexSpec& spec : {flat_spec, hier_spec}) {
        const LoopBenchResult res = run_loop_benchmark(frames, spec, cfg);
        const fs::path sub = dir / spec.label();
        write_pr_csv(sub / "pr_curve.csv", "bench-loop", config, res.pr);
        write_timing_csv(sub / "timing.csv", "bench-loop", config, res.timing);

        const CalibrationResult cal = calibrate_threshold(res.pr);
        if (!cal.zero_fp_found) {
            std::fprintf(stderr,
                         "warning: %s: no sweep threshold reaches zero false "
                         "positives; using the largest\n",
                         spec.label().c_str());
        }
        const auto at = std::find_if(res.pr.begin(), res.pr.end(),
                                     [&](const PRPoint& p) { return p.tau == cal.tau; });
        std::optional<double> speedup;
        if (!spec.hierarchical) {
            flat_rate = res.timing.rate_ms_per_1k;
            speedup = 1.0;
        } else if (res.timing.rate_ms_per_1k > 0.0) {
            speedup = flat_rate / res.timing.rate_ms_per_1k;
        } else if (flat_rate > 0.0) {
            speedup = std::numeric_limits<double>::infinity();
        }
        summary.add_row({spec.label(), spec.hierarchical ? args.pooling : "n/a",
                         CsvReport::format_fixed(res.timing.rate_ms_per_1k, 4),
                         fmt_speedup(speedup), CsvReport::format(cal.tau),
                         CsvReport::format_fixed(at->precision, 6),
                         CsvReport::format_fixed(at->recall, 6)});
    }
    summary.write(dir / "summary.csv");
    std::printf("bench-loop: %zu frames -> %s\n", frames.size(), dir.string().c_str());
    return 0;
}

struct BenchSynthArgs {
    std::string bow_file;
    std::string pos_file;
    std::string neg_file;
    std::uint32_t depth = 2;
    std::uint32_t branching = 8;
    std::string pooling = "mean";
    double tau = 0.1;
    std::size_t checkpoints = 10;
    int repeats = 3;
    std::string clock = "wall";
    std::size_t vocab_size = 0;
    std::string out_dir;
};

int cmd_bench_synth(const BenchSynthArgs& args) {
    const auto raw = read_bow_file(args.bow_file);
    const auto raw_pos = read_bow_file(args.pos_file);
    const auto raw_neg = read_bow_file(args.neg_file);
    if (raw.empty()) {
        throw DataError("empty database stream");
    }
    std::size_t vocab = vocab_size_of(raw, args.vocab_size);
    vocab = std::max(vocab, vocab_size_of(raw_pos, 0));
    vocab = std::max(vocab, vocab_size_of(raw_neg, 0));

    std::vector<StreamFrame> db;
    db.reserve(raw.size());
    for (const auto& [id, hist] : raw) {
        db.push_back({id, hist, Pose{}});
    }
    const IdfTable idf = idf_from_stream(db, vocab);
    const std::vector<StreamFrame> frames = tfidf_stream(db, idf);
    std::vector<SparseHistogram> pos, neg;
    for (const auto& [id, hist] : raw_pos) pos.push_back(tfidf_normalize(hist, idf));
    for (const auto& [id, hist] : raw_neg) neg.push_back(tfidf_normalize(hist, idf));

    SynthQueryConfig cfg;
    cfg.tau = args.tau;
    cfg.checkpoints = args.checkpoints;
    cfg.repeats = args.repeats;
    cfg.clock = clock_from_string(args.clock);

    TreeTopology topo{args.depth, args.branching, pooling_from_string(args.pooling)};
    topo.validate();
    const IndexSpec flat_spec{false, {}, vocab};
    const IndexSpec hier_spec{true, topo, vocab};

    Config config{{"bow", args.bow_file},
                  {"pos", args.pos_file},
                  {"neg", args.neg_file},
                  {"depth", std::to_string(args.depth)},
                  {"branching", std::to_string(args.branching)},
                  {"pooling", args.pooling},
                  {"tau", CsvReport::format(args.tau)},
                  {"checkpoints", std::to_string(args.checkpoints)},
                  {"repeats", std::to_string(args.repeats)},
                  {"clock", args.clock},
                  {"vocab-size", std::to_string(vocab)}};

    SynthQueryResult flat_res = run_synthetic_queries(frames, pos, neg, flat_spec, cfg);
    SynthQueryResult hier_res = run_synthetic_queries(frames, pos, neg, hier_spec, cfg);
    flat_res.positive.speedup = flat_res.negative.speedup = flat_res.overall.speedup =
            1.0;
    attach_speedups(flat_res, hier_res);

    const fs::path dir(args.out_dir);
    const auto write_class = [&](const char* name, const TimingRecord& flat_rec,
                                 const TimingRecord& hier_rec) {
        CsvReport csv("bench-synth", config);
        csv.set_columns({"structure", "pooling", "rate_ms_per_1k", "speedup"});
        csv.add_row({"flat", "n/a", CsvReport::format_fixed(flat_rec.rate_ms_per_1k, 4),
                     fmt_speedup(flat_rec.speedup)});
        csv.add_row({topo.label(), args.pooling,
                     CsvReport::format_fixed(hier_rec.rate_ms_per_1k, 4),
                     fmt_speedup(hier_rec.speedup)});
        csv.write(dir / (std::string("summary_") + name + ".csv"));
    };
    write_class("positive", flat_res.positive, hier_res.positive);
    write_class("negative", flat_res.negative, hier_res.negative);
    write_class("overall", flat_res.overall, hier_res.overall);
    write_timing_csv(dir / "flat" / "timing_positive.csv", "bench-synth", config,
                     flat_res.positive);
    write_timing_csv(dir / "flat" / "timing_negative.csv", "bench-synth", config,
                     flat_res.negative);
    write_timing_csv(dir / topo.label() / "timing_positive.csv", "bench-synth", config,
                     hier_res.positive);
    write_timing_csv(dir / topo.label() / "timing_negative.csv", "bench-synth", config,
                     hier_res.negative);
    std::printf("bench-synth: %zu db frames, %zu/%zu queries -> %s\n", frames.size(),
                pos.size(), neg.size(), dir.string().c_str());
    return 0;
}

struct RetrievalArgs {
    std::string bow_file;
    std::string labels_file;
    std::string strategy = "label-random";
    std::size_t group_size = 16;
    std::string pooling = "sum";
    std::size_t topk_keep = 10;
    std::size_t topk_return = 4;
    std::uint64_t seed = 1;
    bool exclude_self = false;
    bool map_metric = false;
    int repeats = 3;
    std::string clock = "wall";
    std::size_t vocab_size = 0;
    std::string out;
};

int cmd_retrieval(const RetrievalArgs& args) {
    const auto raw = read_bow_file(args.bow_file);
    const auto label_rows = read_labels_file(args.labels_file);
    if (raw.empty()) {
        throw DataError("empty dataset");
    }
    std::unordered_map<LeafId, std::uint32_t> labels;
    for (const auto& [id, group] : label_rows) labels.emplace(id, group);

    const std::size_t vocab = vocab_size_of(raw, args.vocab_size);
    std::vector<SparseHistogram> corpus;
    corpus.reserve(raw.size());
    for (const auto& [id, hist] : raw) corpus.push_back(hist);
    const IdfTable idf = compute_idf(corpus, vocab);

    std::vector<HierIndex::GroupedLeaf> leaves;
    leaves.reserve(raw.size());
    for (const auto& [id, hist] : raw) {
        const auto it = labels.find(id);
        if (it == labels.end()) {
            throw DataError("frame " + std::to_string(id) + " has no label");
        }
        leaves.push_back({id, tfidf_normalize(hist, idf), it->second});
    }
    // a retrieval collection is unordered; sort by id and reject duplicates
    std::sort(leaves.begin(), leaves.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < leaves.size(); ++i) {
        if (leaves[i].id == leaves[i - 1].id) {
            throw DataError("duplicate frame id " + std::to_string(leaves[i].id));
        }
    }

    HierIndex::GroupingStrategy strategy;
    if (args.strategy == "label-random") {
        strategy = HierIndex::GroupingStrategy::kLabelThenRandom;
    } else if (args.strategy == "label-affinity") {
        strategy = HierIndex::GroupingStrategy::kLabelThenGreedyAffinity;
    } else {
        throw ConfigError("unknown group strategy: " + args.strategy);
    }
    const PoolingMode pooling = pooling_from_string(args.pooling);
    const HierIndex index = HierIndex::build_grouped(
            std::vector<HierIndex::GroupedLeaf>(leaves), strategy, args.group_size,
            pooling, args.seed, vocab);

    RetrievalConfig cfg;
    cfg.topk_keep = args.topk_keep;
    cfg.topk_return = args.topk_return;
    cfg.exclude_self = args.exclude_self;
    cfg.map_metric = args.map_metric;
    cfg.repeats = args.repeats;
    cfg.clock = clock_from_string(args.clock);

    const RetrievalResult flat = run_retrieval_flat(leaves, vocab, cfg);
    const RetrievalResult hier = run_retrieval_hier(index, leaves, cfg);

    Config config{{"bow", args.bow_file},
                  {"labels", args.labels_file},
                  {"group-strategy", args.strategy},
                  {"group-size", std::to_string(args.group_size)},
                  {"pooling", args.pooling},
                  {"topk-keep", std::to_string(args.topk_keep)},
                  {"topk-return", std::to_string(args.topk_return)},
                  {"seed", std::to_string(args.seed)},
                  {"exclude-self", args.exclude_self ? "true" : "false"},
                  {"metric", args.map_metric ? "map" : "topk"},
                  {"repeats", std::to_string(args.repeats)},
                  {"clock", args.clock},
                  {"vocab-size", std::to_string(vocab)}};
    CsvReport csv("retrieval", config);
    csv.set_columns({"structure", "grouping", "pooling", "mean_score", "mean_query_ms",
                     "speedup"});
    csv.add_row({"flat", "n/a", "n/a", CsvReport::format_fixed(flat.mean_score, 4),
                 CsvReport::format(flat.mean_query_seconds * 1e3), "1.00"});
    const double speedup = hier.mean_query_seconds > 0.0
                                   ? flat.mean_query_seconds / hier.mean_query_seconds
                                   : std::numeric_limits<double>::infinity();
    csv.add_row({"hierarchical", args.strategy, args.pooling,
                 CsvReport::format_fixed(hier.mean_score, 4),
                 CsvReport::format(hier.mean_query_seconds * 1e3),
                 CsvReport::format_fixed(speedup, 2)});
    csv.write(args.out);
    std::printf("retrieval: flat score %.4f, hierarchical score %.4f -> %s\n",
                flat.mean_score, hier.mean_score, args.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical pooled bag-of-words retrieval benchmark"};
    app.require_subcommand(1);

    VocabBuildArgs vb;
    CLI::App* vocab_cmd =
            app.add_subcommand("vocab-build", "build a vocabulary by hierarchical k-means");
    vocab_cmd->add_option("--descriptors", vb.descriptor_file, "descriptor file")
            ->required();
    vocab_cmd->add_option("--branching", vb.branching, "children per node");
    vocab_cmd->add_option("--depth", vb.depth, "tree depth");
    vocab_cmd->add_option("--seed", vb.seed, "rng seed");
    vocab_cmd->add_option("--out", vb.out, "output vocabulary file")->required();

    QuantizeArgs qa;
    CLI::App* quant_cmd = app.add_subcommand(
            "quantize", "quantize descriptor files (one frame each) into a bow file");
    quant_cmd->add_option("--vocab", qa.vocab_file, "vocabulary file")->required();
    quant_cmd->add_option("--out", qa.out, "output bow file")->required();
    quant_cmd->add_flag("--update-idf", qa.update_idf,
                        "recompute the vocabulary idf from these frames");
    quant_cmd->add_option("frames", qa.frame_files, "descriptor files")->required();

    SynthArgs sa;
    CLI::App* synth_cmd = app.add_subcommand("synth-gen", "generate a synthetic dataset");
    synth_cmd->add_option("--mode", sa.mode, "loop or grouped");
    synth_cmd->add_option("--out-dir", sa.out_dir, "output directory")->required();
    synth_cmd->add_option("--seed", sa.seed, "rng seed");
    synth_cmd->add_option("--vocab-size", sa.vocab_size, "vocabulary size");
    synth_cmd->add_option("--frames", sa.frames, "sequence length (loop mode)");
    synth_cmd->add_option("--words-per-frame", sa.words_per_frame, "words per frame");
    synth_cmd->add_option("--loops", sa.loops, "revisit runs (loop mode)");
    synth_cmd->add_option("--loop-len", sa.loop_len, "frames per revisit run");
    synth_cmd->add_option("--rho", sa.rho, "word replacement probability");
    synth_cmd->add_option("--negatives", sa.negatives, "negative query count");
    synth_cmd->add_option("--groups", sa.groups, "group count (grouped mode)");
    synth_cmd->add_option("--variants", sa.variants, "variants per group");

    BenchLoopArgs bl;
    CLI::App* loop_cmd =
            app.add_subcommand("bench-loop", "incremental loop-closure benchmark");
    loop_cmd->add_option("--bow", bl.bow_file, "bag-of-words file")->required();
    loop_cmd->add_option("--poses", bl.pose_file, "pose file")->required();
    loop_cmd->add_option("--depth", bl.depth, "hierarchy depth");
    loop_cmd->add_option("--branching", bl.branching, "branching factor");
    loop_cmd->add_option("--pooling", bl.pooling, "mean|sum|max");
    loop_cmd->add_option("--tau", bl.tau, "query threshold");
    loop_cmd->add_option("--tau-sweep", bl.sweep, "start:stop:step");
    loop_cmd->add_option("--min-gap", bl.min_gap, "temporal exclusion gap");
    loop_cmd->add_option("--radius-m", bl.radius_m, "correctness radius, meters");
    loop_cmd->add_option("--repeats", bl.repeats, "timing repeats");
    loop_cmd->add_option("--clock", bl.clock, "wall|ops");
    loop_cmd->add_option("--vocab-size", bl.vocab_size, "vocabulary size override");
    loop_cmd->add_option("--out-dir", bl.out_dir, "report directory")->required();

    BenchSynthArgs bs;
    CLI::App* syncb_cmd =
            app.add_subcommand("bench-synth", "timing benchmark on synthetic queries");
    syncb_cmd->add_option("--bow", bs.bow_file, "database bow file")->required();
    syncb_cmd->add_option("--pos", bs.pos_file, "positive queries bow file")->required();
    syncb_cmd->add_option("--neg", bs.neg_file, "negative queries bow file")->required();
    syncb_cmd->add_option("--depth", bs.depth, "hierarchy depth");
    syncb_cmd->add_option("--branching", bs.branching, "branching factor");
    syncb_cmd->add_option("--pooling", bs.pooling, "mean|sum|max");
    syncb_cmd->add_option("--tau", bs.tau, "query threshold");
    syncb_cmd->add_option("--checkpoints", bs.checkpoints, "timing checkpoints");
    syncb_cmd->add_option("--repeats", bs.repeats, "timing repeats");
    syncb_cmd->add_option("--clock", bs.clock, "wall|ops");
    syncb_cmd->add_option("--vocab-size", bs.vocab_size, "vocabulary size override");
    syncb_cmd->add_option("--out-dir", bs.out_dir, "report directory")->required();

    RetrievalArgs ra;
    CLI::App* ret_cmd =
            app.add_subcommand("retrieval", "grouped image-retrieval benchmark");
    ret_cmd->add_option("--bow", ra.bow_file, "bag-of-words file")->required();
    ret_cmd->add_option("--labels", ra.labels_file, "labels file")->required();
    ret_cmd->add_option("--group-strategy", ra.strategy, "label-random|label-affinity");
    ret_cmd->add_option("--group-size", ra.group_size, "top-layer group size");
    ret_cmd->add_option("--pooling", ra.pooling, "mean|sum|max");
    ret_cmd->add_option("--topk-keep", ra.topk_keep, "nodes kept per layer");
    ret_cmd->add_option("--topk-return", ra.topk_return, "results returned");
    ret_cmd->add_option("--seed", ra.seed, "rng seed");
    ret_cmd->add_flag("--exclude-self", ra.exclude_self,
                      "exclude the query from its own results");
    ret_cmd->add_flag("--map", ra.map_metric, "report mean average precision");
    ret_cmd->add_option("--repeats", ra.repeats, "timing repeats");
    ret_cmd->add_option("--clock", ra.clock, "wall|ops");
    ret_cmd->add_option("--vocab-size", ra.vocab_size, "vocabulary size override");
    ret_cmd->add_option("--out", ra.out, "report file")->required();

    try {
        app.parse(argc, argv);
        if (vocab_cmd->parsed()) return cmd_vocab_build(vb);
        if (quant_cmd->parsed()) return cmd_quantize(qa);
        if (synth_cmd->parsed()) return cmd_synth_gen(sa);
        if (loop_cmd->parsed()) return cmd_bench_loop(bl);
        if (syncb_cmd->parsed()) return cmd_bench_synth(bs);
        if (ret_cmd->parsed()) return cmd_retrieval(ra);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
