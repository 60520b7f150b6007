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

#include <functional>
#include <string>
#include <vector>

namespace superpol {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast invariant suite (well under a minute): closed-form toy values,
// super-policy dominance on random environments, projection and bridge
// oracles, the one-step sequential reduction, determinism and I/O round trips.
// `line` receives one formatted line per check as it finishes.
std::vector<CheckResult> run_selfcheck(
    const std::function<void(const std::string&)>& line = {});

}  // namespace superpol
