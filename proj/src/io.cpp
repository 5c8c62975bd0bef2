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

#include "hibow/io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "hibow/error.hpp"

namespace hibow {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("file not found: " + path.string());
    }
    return in;
}

std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, mode);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    return out;
}

[[noreturn]] void bad_line(const std::filesystem::path& path, std::size_t line,
                           const std::string& why) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + why);
}

}  // namespace

std::vector<std::pair<LeafId, SparseHistogram>> read_bow_file(
        const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<LeafId, SparseHistogram>> frames;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        unsigned long long id = 0;
        if (!(ss >> id)) {
            bad_line(path, lineno, "expected frame id");
        }
        std::vector<SparseHistogram::Entry> entries;
        std::string tok;
        while (ss >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) {
                bad_line(path, lineno, "expected <word>:<count>, got '" + tok + "'");
            }
            try {
                const auto word = static_cast<WordId>(std::stoul(tok.substr(0, colon)));
                const double count = std::stod(tok.substr(colon + 1));
                entries.push_back({word, count});
            } catch (const std::exception&) {
                bad_line(path, lineno, "bad entry '" + tok + "'");
            }
        }
        try {
            frames.emplace_back(static_cast<LeafId>(id),
                                SparseHistogram(std::move(entries),
                                                NormState::kRawCounts));
        } catch (const std::invalid_argument& e) {
            bad_line(path, lineno, e.what());
        }
    }
    return frames;
}

void write_bow_file(const std::filesystem::path& path,
                    std::span<const std::pair<LeafId, SparseHistogram>> frames) {
    std::ofstream out = open_output(path);
    char buf[40];
    for (const auto& [id, hist] : frames) {
        out << id;
        for (const auto& e : hist.entries()) {
            const double r = std::round(e.weight);
            if (r == e.weight && std::abs(r) < 1e15) {
                std::snprintf(buf, sizeof buf, "%.0f", e.weight);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", e.weight);
            }
            out << " " << e.word << ":" << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed to write " + path.string());
    }
}

std::vector<Pose> read_pose_file(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<Pose> poses;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        double v[12];
        for (int i = 0; i < 12; ++i) {
            if (!(ss >> v[i])) {
                bad_line(path, lineno, "expected 12 values per pose line");
            }
        }
        Pose p;
        p.t = static_cast<std::int64_t>(poses.size());
        p.rotation = {v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]};
        p.translation = {v[3], v[7], v[11]};
        if (!rotation_orthonormal(p)) {
            bad_line(path, lineno, "rotation is not orthonormal");
        }
        poses.push_back(p);
    }
    return poses;
}

void write_pose_file(const std::filesystem::path& path, std::span<const Pose> poses) {
    std::ofstream out = open_output(path);
    char buf[40];
    for (const Pose& p : poses) {
        const double row[12] = {p.rotation[0], p.rotation[1], p.rotation[2],
                                p.translation[0], p.rotation[3], p.rotation[4],
                                p.rotation[5], p.translation[1], p.rotation[6],
                                p.rotation[7], p.rotation[8], p.translation[2]};
        for (int i = 0; i < 12; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << (i ? " " : "") << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed to write " + path.string());
    }
}

std::vector<std::pair<LeafId, std::uint32_t>> read_labels_file(
        const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::pair<LeafId, std::uint32_t>> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        unsigned long long id = 0, group = 0;
        if (!(ss >> id >> group)) {
            bad_line(path, lineno, "expected <frame_id> <group_id>");
        }
        labels.emplace_back(static_cast<LeafId>(id), static_cast<std::uint32_t>(group));
    }
    return labels;
}

void write_labels_file(const std::filesystem::path& path,
                       std::span<const std::pair<LeafId, std::uint32_t>> labels) {
    std::ofstream out = open_output(path);
    for (const auto& [id, group] : labels) {
        out << id << " " << group << "\n";
    }
    if (!out) {
        throw DataError("failed to write " + path.string());
    }
}

std::vector<Descriptor> read_descriptor_file(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::vector<Descriptor> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("b:", 0) == 0) {
            const std::string hex = line.substr(2);
            if (hex.empty() || hex.size() % 2 != 0) {
                bad_line(path, lineno, "bad binary descriptor");
            }
            std::vector<std::uint8_t> bytes(hex.size() / 2);
            for (std::size_t i = 0; i < bytes.size(); ++i) {
                unsigned v = 0;
                if (std::sscanf(hex.c_str() + 2 * i, "%2x", &v) != 1) {
                    bad_line(path, lineno, "bad binary descriptor");
                }
                bytes[i] = static_cast<std::uint8_t>(v);
            }
            out.push_back(Descriptor::binary(bytes));
        } else {
            std::vector<double> values;
            std::stringstream ss(line);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    values.push_back(std::stod(item));
                } catch (const std::exception&) {
                    bad_line(path, lineno, "bad real descriptor");
                }
            }
            if (values.empty()) {
                bad_line(path, lineno, "empty descriptor");
            }
            out.push_back(Descriptor::real(std::move(values)));
        }
    }
    return out;
}

void write_descriptor_file(const std::filesystem::path& path,
                           std::span<const Descriptor> descriptors) {
    std::ofstream out = open_output(path);
    char buf[40];
    for (const Descriptor& d : descriptors) {
        if (d.kind() == DescriptorKind::kBinary) {
            out << "b:";
            for (std::uint8_t byte : d.bytes()) {
                std::snprintf(buf, sizeof buf, "%02x", byte);
                out << buf;
            }
        } else {
            const auto& v = d.values();
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", v[i]);
                out << (i ? "," : "") << buf;
            }
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed to write " + path.string());
    }
}

void save_vocab_file(const std::filesystem::path& path, const VocabularyTree& tree) {
    std::ofstream out = open_output(path);
    tree.save(out);
}

VocabularyTree load_vocab_file(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    return VocabularyTree::load(in);
}

void save_index_file(const std::filesystem::path& path, const HierIndex& index,
                     std::uint64_t vocab_hash) {
    std::ofstream out = open_output(path, std::ios::binary);
    index.save(out, vocab_hash);
}

HierIndex load_index_file(const std::filesystem::path& path,
                          std::uint64_t* vocab_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("file not found: " + path.string());
    }
    return HierIndex::load(in, vocab_hash);
}

CsvReport::CsvReport(std::string command,
                     std::vector<std::pair<std::string, std::string>> config)
    : command_(std::move(command)), config_(std::move(config)) {}

void CsvReport::set_columns(std::vector<std::string> names) {
    columns_ = std::move(names);
}

void CsvReport::add_row(std::vector<std::string> cells) {
    rows_.push_back(std::move(cells));
}

std::string CsvReport::format(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string CsvReport::format_fixed(double value, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

void CsvReport::write(const std::filesystem::path& path) const {
    std::ofstream out = open_output(path);
    out << "# hibow " << command_ << "\n";
    out << "# config:";
    for (const auto& [key, value] : config_) {
        out << " " << key << "=" << value;
    }
    out << "\n";
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << "# timestamp: " << stamp << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        out << (i ? "," : "") << columns_[i];
    }
    out << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << row[i];
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("failed to write " + path.string());
    }
}

}  // namespace hibow
