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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "superpol/datamodel.hpp"

namespace superpol {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

// Bandit files: header `s_0.., z_0.., w_0.., a, r`, comma separated.
void write_bandit_csv(std::ostream& out, const BanditDataset& data);
// K defaults to max(a) + 1 (at least 2) when not given.
BanditDataset read_bandit_csv(std::istream& in,
                              std::optional<int> num_actions = std::nullopt);

// Sequential files: header `o0_.., o1_.., a1, r1, w1_.., o2_.., a2, r2, w2_..`.
// The reward bound defaults to the largest observed |r|.
void write_sequential_csv(std::ostream& out, const SequentialDataset& data);
SequentialDataset read_sequential_csv(
    std::istream& in, std::optional<int> num_actions = std::nullopt,
    std::optional<double> reward_bound = std::nullopt);

// True when the header of the file names sequential columns (o0_*).
bool is_sequential_csv(const std::filesystem::path& path);

BanditDataset load_bandit(const std::filesystem::path& path,
                          std::optional<int> num_actions = std::nullopt);
SequentialDataset load_sequential(const std::filesystem::path& path,
                                  std::optional<int> num_actions = std::nullopt);

std::string read_text_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

}  // namespace superpol
