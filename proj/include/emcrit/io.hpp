// Copyright 2026 The emcrit Authors
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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace emcrit {

using json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Appends one compact JSON record per line (the ensemble-archive format).
void append_jsonl(const std::filesystem::path& path, const json& record);
std::vector<json> read_jsonl(const std::filesystem::path& path);

// FNV-1a, used to fingerprint fit inputs and output files.
std::uint64_t fnv1a64(const std::string& data);
std::string hex64(std::uint64_t value);

// Minimal CSV emitter; values are formatted with max_digits10 so round-trips
// are lossless.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);

  template <class... Ts>
  void row(const Ts&... values) {
    std::ostringstream line;
    format_row(line, values...);
    rows_.push_back(line.str());
    if (sizeof...(values) != columns_.size())
      throw std::runtime_error("CsvWriter: column count mismatch");
  }

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  template <class T, class... Rest>
  static void format_row(std::ostringstream& out, const T& first, const Rest&... rest) {
    format_cell(out, first);
    ((out << ',', format_cell(out, rest)), ...);
  }
  static void format_cell(std::ostringstream& out, double v);
  static void format_cell(std::ostringstream& out, const std::string& v) { out << v; }
  static void format_cell(std::ostringstream& out, const char* v) { out << v; }
  template <class T>
  static void format_cell(std::ostringstream& out, const T& v) { out << v; }

  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

}  // namespace emcrit
