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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hibow/hier_index.hpp"
#include "hibow/histogram.hpp"
#include "hibow/match.hpp"
#include "hibow/vocab.hpp"

namespace hibow {

// Bag-of-words file: one frame per line,
//   <frame_id> <word_id>:<count> <word_id>:<count> ...
// word ids ascending. Counts may be fractional.
std::vector<std::pair<LeafId, SparseHistogram>> read_bow_file(
        const std::filesystem::path& path);
void write_bow_file(const std::filesystem::path& path,
                    std::span<const std::pair<LeafId, SparseHistogram>> frames);

// Pose file, KITTI odometry convention: 12 space-separated reals per line,
// a 3x4 row-major [R|t]; translation in columns 4, 8, 12.
std::vector<Pose> read_pose_file(const std::filesystem::path& path);
void write_pose_file(const std::filesystem::path& path, std::span<const Pose> poses);

// Labels file: <frame_id> <group_id> per line.
std::vector<std::pair<LeafId, std::uint32_t>> read_labels_file(
        const std::filesystem::path& path);
void write_labels_file(const std::filesystem::path& path,
                       std::span<const std::pair<LeafId, std::uint32_t>> labels);

// Descriptor file: one descriptor per line; binary as b:<hex>, real as
// comma-separated decimals.
std::vector<Descriptor> read_descriptor_file(const std::filesystem::path& path);
void write_descriptor_file(const std::filesystem::path& path,
                           std::span<const Descriptor> descriptors);

void save_vocab_file(const std::filesystem::path& path, const VocabularyTree& tree);
VocabularyTree load_vocab_file(const std::filesystem::path& path);

void save_index_file(const std::filesystem::path& path, const HierIndex& index,
                     std::uint64_t vocab_hash = 0);
HierIndex load_index_file(const std::filesystem::path& path,
                          std::uint64_t* vocab_hash = nullptr);

/// CSV report with a comment header carrying the command, its configuration
/// and a timestamp. Bodies (every non-comment line, plus the config line) are
/// deterministic for identical inputs; only the timestamp line varies.
class CsvReport {
  public:
    CsvReport(std::string command,
              std::vector<std::pair<std::string, std::string>> config);

    void set_columns(std::vector<std::string> names);
    void add_row(std::vector<std::string> cells);
    void write(const std::filesystem::path& path) const;

    static std::string format(double value);       // shortest round-trip
    static std::string format_fixed(double value, int digits);

  private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> config_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace hibow
