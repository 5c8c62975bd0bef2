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

// End-to-end checks of the command-line binary.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "hibow/io.hpp"

using namespace hibow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hibow_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    const std::string cmd = std::string(HIBOW_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// file content with the timestamp header line removed
std::string body_of(const fs::path& p) {
    std::ifstream in(p);
    std::string line, out;
    while (std::getline(in, line)) {
        if (line.rfind("# timestamp:", 0) == 0) continue;
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<std::string> data_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    }
    return rows;
}

// columns of a csv row
std::vector<std::string> split(const std::string& row) {
    std::vector<std::string> cells;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace

TEST_CASE("missing subcommand or file produce the documented exit codes") {
    TempDir dir;
    CHECK(run("") == 1);
    CHECK(run("no-such-command") == 1);
    CHECK(run("vocab-build --descriptors " + (dir.path / "nope.desc").string() +
              " --out " + (dir.path / "v.txt").string()) == 2);
}

TEST_CASE("vocab-build and quantize work end to end") {
    TempDir dir;
    const fs::path desc = dir.path / "points.desc";
    {
        std::ofstream out(desc);
        out << "0.0,0.0\n100.0,0.0\n0.0,100.0\n100.0,100.0\n";
    }
    const fs::path vocab = dir.path / "vocab.txt";
    CHECK(run("vocab-build --descriptors " + desc.string() + " --branching 2 --depth 2 "
              "--seed 5 --out " + vocab.string()) == 0);
    CHECK(fs::exists(vocab));

    // branching 1 is a configuration error
    CHECK(run("vocab-build --descriptors " + desc.string() + " --branching 1 --out " +
              (dir.path / "x.txt").string()) == 1);

    const fs::path bow = dir.path / "frames.bow";
    CHECK(run("quantize --vocab " + vocab.string() + " --out " + bow.string() + " " +
              desc.string() + " " + desc.string()) == 0);
    const auto frames = read_bow_file(bow);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].second.total_mass() == 4.0);
}

TEST_CASE("synth-gen rejects a zero-length sequence") {
    TempDir dir;
    CHECK(run("synth-gen --mode loop --frames 0 --out-dir " + dir.path.string()) == 1);
}

TEST_CASE("synth-gen is byte-identical for a fixed seed") {
    TempDir dir;
    const std::string flags =
            " --mode loop --frames 300 --loops 4 --loop-len 2 --vocab-size 500 --seed 11";
    CHECK(run("synth-gen" + flags + " --out-dir " + (dir.path / "a").string()) == 0);
    CHECK(run("synth-gen" + flags + " --out-dir " + (dir.path / "b").string()) == 0);
    for (const char* name : {"frames.bow", "poses.txt", "queries_pos.bow",
                             "queries_neg.bow"}) {
        CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
    }
    // generated files parse back through the loaders
    CHECK(read_bow_file(dir.path / "a" / "frames.bow").size() == 300);
    CHECK(read_pose_file(dir.path / "a" / "poses.txt").size() == 300);
}

TEST_CASE("bench-loop writes summary and per-structure reports") {
    TempDir dir;
    const fs::path data = dir.path / "data";
    REQUIRE(run("synth-gen --mode loop --frames 300 --loops 4 --loop-len 2 "
                "--vocab-size 500 --seed 3 --out-dir " + data.string()) == 0);

    const std::string common = "bench-loop --bow " + (data / "frames.bow").string() +
                               " --poses " + (data / "poses.txt").string() +
                               " --min-gap 10 --repeats 1 --clock ops --tau-sweep "
                               "0:0.5:0.05 --out-dir ";

    const fs::path sum_dir = dir.path / "sum";
    CHECK(run(common + sum_dir.string() + " --depth 2 --branching 4 --pooling sum") == 0);
    const auto sum_rows = data_rows(sum_dir / "summary.csv");
    REQUIRE(sum_rows.size() == 3);  // header + flat + hier
    const auto flat_cells = split(sum_rows[1]);
    const auto hier_cells = split(sum_rows[2]);
    CHECK(flat_cells[0] == "flat");
    CHECK(hier_cells[0] == "d2b4-sum");
    // identical precision/recall columns for lossless pooling
    CHECK(hier_cells[4] == flat_cells[4]);
    CHECK(hier_cells[5] == flat_cells[5]);
    CHECK(hier_cells[6] == flat_cells[6]);
    CHECK(fs::exists(sum_dir / "flat" / "pr_curve.csv"));
    CHECK(fs::exists(sum_dir / "d2b4-sum" / "timing.csv"));

    const fs::path max_dir = dir.path / "max";
    CHECK(run(common + max_dir.string() + " --depth 2 --branching 4 --pooling max") == 0);
    const auto max_cells = split(data_rows(max_dir / "summary.csv")[2]);
    CHECK(max_cells[4] == flat_cells[4]);
    CHECK(max_cells[5] == flat_cells[5]);
    CHECK(max_cells[6] == flat_cells[6]);

    // depth 1 behaves exactly like the flat baseline
    const fs::path d1_dir = dir.path / "d1";
    CHECK(run(common + d1_dir.string() + " --depth 1 --branching 4 --pooling mean") == 0);
    CHECK(body_of(d1_dir / "d1b4-mean" / "pr_curve.csv") ==
          body_of(d1_dir / "flat" / "pr_curve.csv"));

    // frame count mismatch is a data error
    std::ofstream(dir.path / "short.txt") << "1 0 0 0 0 1 0 0 0 0 1 0\n";
    CHECK(run("bench-loop --bow " + (data / "frames.bow").string() + " --poses " +
              (dir.path / "short.txt").string() + " --out-dir " +
              (dir.path / "bad").string()) == 2);
}

TEST_CASE("bench-synth writes the three per-class summaries") {
    TempDir dir;
    const fs::path data = dir.path / "data";
    REQUIRE(run("synth-gen --mode loop --frames 300 --loops 4 --loop-len 2 "
                "--vocab-size 500 --negatives 10 --seed 3 --out-dir " +
                data.string()) == 0);
    const fs::path out = dir.path / "bench";
    CHECK(run("bench-synth --bow " + (data / "frames.bow").string() + " --pos " +
              (data / "queries_pos.bow").string() + " --neg " +
              (data / "queries_neg.bow").string() +
              " --depth 2 --branching 8 --pooling mean --tau 0.2 --checkpoints 4 "
              "--repeats 1 --clock ops --out-dir " + out.string()) == 0);
    for (const char* name :
         {"summary_positive.csv", "summary_negative.csv", "summary_overall.csv"}) {
        const auto rows = data_rows(out / name);
        REQUIRE(rows.size() == 3);
        CHECK(split(rows[1])[0] == "flat");
        CHECK(split(rows[2])[0] == "d2b8-mean");
    }
    CHECK(fs::exists(out / "flat" / "timing_negative.csv"));
    CHECK(fs::exists(out / "d2b8-mean" / "timing_positive.csv"));
}

TEST_CASE("retrieval reports flat and hierarchical rows") {
    TempDir dir;
    const fs::path data = dir.path / "data";
    REQUIRE(run("synth-gen --mode grouped --groups 30 --variants 4 --vocab-size 800 "
                "--words-per-frame 60 --seed 3 --out-dir " + data.string()) == 0);
    const fs::path out = dir.path / "retrieval.csv";
    CHECK(run("retrieval --bow " + (data / "frames.bow").string() + " --labels " +
              (data / "labels.txt").string() +
              " --group-strategy label-affinity --group-size 4 --pooling sum "
              "--repeats 1 --clock ops --out " + out.string()) == 0);
    const auto rows = data_rows(out);
    REQUIRE(rows.size() == 3);
    CHECK(split(rows[1])[0] == "flat");
    CHECK(split(rows[2])[0] == "hierarchical");
    CHECK(split(rows[2])[1] == "label-affinity");

    // labels missing for some frame
    std::ofstream(dir.path / "partial.txt") << "0 0\n";
    CHECK(run("retrieval --bow " + (data / "frames.bow").string() + " --labels " +
              (dir.path / "partial.txt").string() + " --out " +
              (dir.path / "r.csv").string()) == 2);
}
