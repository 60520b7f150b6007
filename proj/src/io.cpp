// Copyright 2026 The superpol Authors.
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

#include "superpol/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

#include "superpol/error.hpp"

namespace superpol {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
      field.pop_back();
    }
    std::size_t start = field.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string()
                                             : field.substr(start));
  }
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

Table read_table(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kData, "empty data file");
  table.header = split_fields(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.header.size()) {
      fail(ErrorCode::kData, "line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(table.header.size()) +
                                 " fields, found " +
                                 std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const std::string& f : fields) row.push_back(parse_double(f));
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Column indices whose header is `prefix<k>` for k = 0, 1, ... in order.
std::vector<std::size_t> indexed_columns(const std::vector<std::string>& header,
                                         const std::string& prefix) {
  std::map<int, std::size_t> found;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& h = header[c];
    if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) {
      continue;
    }
    int k = 0;
    auto [ptr, ec] = std::from_chars(h.data() + prefix.size(),
                                     h.data() + h.size(), k);
    if (ec == std::errc() && ptr == h.data() + h.size()) found[k] = c;
  }
  std::vector<std::size_t> out;
  for (int k = 0; k < static_cast<int>(found.size()); ++k) {
    auto it = found.find(k);
    if (it == found.end()) {
      fail(ErrorCode::kData, "column " + prefix + std::to_string(k) +
                                 " missing from header");
    }
    out.push_back(it->second);
  }
  return out;
}

std::size_t named_column(const std::vector<std::string>& header,
                         const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    fail(ErrorCode::kData, "column '" + name + "' missing from header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

Matrix gather(const Table& t, const std::vector<std::size_t>& cols) {
  Matrix out(static_cast<Eigen::Index>(t.rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          t.rows[i][cols[j]];
    }
  }
  return out;
}

Actions gather_actions(const Table& t, std::size_t col) {
  Actions out(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double v = t.rows[i][col];
    if (v != std::floor(v) || !std::isfinite(v)) {
      fail(ErrorCode::kData, "non-integer action at data row " +
                                 std::to_string(i + 1));
    }
    out[i] = static_cast<int>(v);
  }
  return out;
}

Vector gather_vector(const Table& t, std::size_t col) {
  Vector out(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = t.rows[i][col];
  }
  return out;
}

void write_block_header(std::ostream& out, const std::string& prefix,
                        Eigen::Index cols, bool& first) {
  for (Eigen::Index k = 0; k < cols; ++k) {
    if (!first) out << ',';
    out << prefix << k;
    first = false;
  }
}

void write_block_row(std::ostream& out, const Matrix& m, Eigen::Index i,
                     bool& first) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    if (!first) out << ',';
    out << format_double(m(i, k));
    first = false;
  }
}

int infer_actions(const std::vector<const Actions*>& blocks,
                  std::optional<int> declared) {
  if (declared) return *declared;
  int top = 1;
  for (const Actions* a : blocks) {
    for (int v : *a) top = std::max(top, v);
  }
  return top + 1;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail(ErrorCode::kInternal, "format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    // from_chars rejects "nan"/"inf" spellings with a sign on some vendors.
    if (text == "nan" || text == "NaN") return std::nan("");
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    fail(ErrorCode::kData, "cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

void write_bandit_csv(std::ostream& out, const BanditDataset& data) {
  bool first = true;
  write_block_header(out, "s_", data.s.cols(), first);
  write_block_header(out, "z_", data.z.cols(), first);
  write_block_header(out, "w_", data.w.cols(), first);
  out << (first ? "" : ",") << "a,r\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    first = true;
    write_block_row(out, data.s, r, first);
    write_block_row(out, data.z, r, first);
    write_block_row(out, data.w, r, first);
    out << (first ? "" : ",") << data.a[i] << ',' << format_double(data.r(r))
        << '\n';
  }
}

BanditDataset read_bandit_csv(std::istream& in, std::optional<int> num_actions) {
  Table t = read_table(in);
  BanditDataset data;
  data.s = gather(t, indexed_columns(t.header, "s_"));
  data.z = gather(t, indexed_columns(t.header, "z_"));
  data.w = gather(t, indexed_columns(t.header, "w_"));
  data.a = gather_actions(t, named_column(t.header, "a"));
  data.r = gather_vector(t, named_column(t.header, "r"));
  data.num_actions = infer_actions({&data.a}, num_actions);
  return data;
}

void write_sequential_csv(std::ostream& out, const SequentialDataset& data) {
  bool first = true;
  write_block_header(out, "o0_", data.o0.cols(), first);
  for (int t = 1; t <= data.horizon(); ++t) {
    const StepBlock& step = data.steps[static_cast<std::size_t>(t - 1)];
    const std::string tag = std::to_string(t);
    write_block_header(out, "o" + tag + "_", step.o.cols(), first);
    out << (first ? "" : ",") << 'a' << tag << ",r" << tag;
    first = false;
    write_block_header(out, "w" + tag + "_", step.w.cols(), first);
  }
  out << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    first = true;
    write_block_row(out, data.o0, r, first);
    for (const StepBlock& step : data.steps) {
      write_block_row(out, step.o, r, first);
      out << (first ? "" : ",") << step.a[i] << ',' << format_double(step.r(r));
      first = false;
      write_block_row(out, step.w, r, first);
    }
    out << '\n';
  }
}

SequentialDataset read_sequential_csv(std::istream& in,
                                      std::optional<int> num_actions,
                                      std::optional<double> reward_bound) {
  Table t = read_table(in);
  SequentialDataset data;
  data.o0 = gather(t, indexed_columns(t.header, "o0_"));
  for (int step = 1;; ++step) {
    const std::string tag = std::to_string(step);
    if (std::find(t.header.begin(), t.header.end(), "a" + tag) ==
        t.header.end()) {
      break;
    }
    StepBlock block;
    block.o = gather(t, indexed_columns(t.header, "o" + tag + "_"));
    block.a = gather_actions(t, named_column(t.header, "a" + tag));
    block.r = gather_vector(t, named_column(t.header, "r" + tag));
    block.w = gather(t, indexed_columns(t.header, "w" + tag + "_"));
    data.steps.push_back(std::move(block));
  }
  if (data.steps.empty()) fail(ErrorCode::kData, "no step columns (a1) found");
  std::vector<const Actions*> blocks;
  double bound = 0.0;
  for (const StepBlock& s : data.steps) {
    blocks.push_back(&s.a);
    if (s.r.size() > 0) bound = std::max(bound, s.r.cwiseAbs().maxCoeff());
  }
  data.num_actions = infer_actions(blocks, num_actions);
  data.reward_bound = reward_bound.value_or(bound);
  return data;
}

bool is_sequential_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  return line.rfind("o0_", 0) == 0;
}

BanditDataset load_bandit(const std::filesystem::path& path,
                          std::optional<int> num_actions) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return read_bandit_csv(in, num_actions);
}

SequentialDataset load_sequential(const std::filesystem::path& path,
                                  std::optional<int> num_actions) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return read_sequential_csv(in, num_actions);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::kIo, "cannot rename onto " + path.string());
}

}  // namespace superpol
