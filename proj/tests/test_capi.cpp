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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include "superpol/superpol.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  superpol_options* h = nullptr;
  Options() { REQUIRE(superpol_options_create(&h) == SUPERPOL_OK); }
  ~Options() { superpol_options_free(h); }
  superpol_status set(const char* k, const char* v) { return superpol_options_set(h, k, v); }
};

std::string take(char* text) {
  std::string out = text ? text : "";
  superpol_string_free(text);
  return out;
}

}  // namespace

TEST_CASE("options validate their keys") {
  Options o;
  CHECK(o.set("eps", "0.5") == SUPERPOL_OK);
  CHECK(std::string(superpol_options_get(o.h, "eps")) == "0.5");
  CHECK(superpol_options_get(o.h, "n") == nullptr);
  CHECK(o.set("epsilon", "0.5") == SUPERPOL_INVALID_ARGUMENT);
  CHECK(std::string(superpol_last_error()).find("epsilon") != std::string::npos);
  CHECK(std::string(superpol_status_name(SUPERPOL_DATA)) == "invalid data");
  CHECK(superpol_version()[0] != '\0');
}

TEST_CASE("bad option values fail when used") {
  Options o;
  o.set("spec", "discrete");
  o.set("n", "-4");
  superpol_dataset* d = nullptr;
  CHECK(superpol_generate(o.h, &d) == SUPERPOL_INVALID_ARGUMENT);
  CHECK(d == nullptr);
  CHECK(superpol_last_error()[0] != '\0');
  o.set("n", "100");
  o.set("spec", "nonsense");
  CHECK(superpol_generate(o.h, &d) == SUPERPOL_INVALID_ARGUMENT);
}

TEST_CASE("generate, save, load and fit a bandit dataset") {
  Options o;
  o.set("spec", "discrete");
  o.set("eps", "0.9");
  o.set("n", "2000");
  o.set("seed", "11");
  superpol_dataset* data = nullptr;
  REQUIRE(superpol_generate(o.h, &data) == SUPERPOL_OK);
  superpol_dataset_info info{};
  REQUIRE(superpol_dataset_info_get(data, &info) == SUPERPOL_OK);
  CHECK(info.sequential == 0);
  CHECK(info.rows == 2000);
  CHECK(info.num_actions == 2);

  const fs::path path = fs::temp_directory_path() / "superpol_capi_data.csv";
  REQUIRE(superpol_dataset_save(data, path.c_str()) == SUPERPOL_OK);
  superpol_dataset* back = nullptr;
  REQUIRE(superpol_dataset_load(path.c_str(), &back) == SUPERPOL_OK);
  superpol_dataset_info back_info{};
  superpol_dataset_info_get(back, &back_info);
  CHECK(back_info.rows == info.rows);
  CHECK(back_info.s_cols == info.s_cols);
  fs::remove(path);

  char* desc = nullptr;
  REQUIRE(superpol_describe_spec(o.h, &desc) == SUPERPOL_OK);
  CHECK(take(desc).find("\"discrete\"") != std::string::npos);

  superpol_model* model = nullptr;
  REQUIRE(superpol_fit(back, o.h, &model) == SUPERPOL_OK);
  const double s[] = {1.0};
  const double z[] = {1.0};
  int action = -1;
  REQUIRE(superpol_model_act(model, s, 1, z, 1, 0, &action) == SUPERPOL_OK);
  CHECK((action == 0 || action == 1));
  CHECK(superpol_model_act(model, s, 3, z, 1, 0, &action) == SUPERPOL_INVALID_ARGUMENT);
  double value = 0.0;
  REQUIRE(superpol_model_value(model, data, &value) == SUPERPOL_OK);
  CHECK(value > 0.0);
  char* dump = nullptr;
  REQUIRE(superpol_model_dump(model, &dump) == SUPERPOL_OK);
  CHECK(take(dump).rfind("superpol-model 1 bandit kind=super", 0) == 0);
  char* preview = nullptr;
  REQUIRE(superpol_model_preview(model, 3, &preview) == SUPERPOL_OK);
  const std::string csv = take(preview);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  int seq_action = 0;
  const double obs[] = {0.0};
  const int behavior[] = {0};
  CHECK(superpol_model_act_seq(model, 1, obs, 1, nullptr, behavior, &seq_action) ==
        SUPERPOL_INVALID_ARGUMENT);
  superpol_model_free(model);
  superpol_dataset_free(back);
  superpol_dataset_free(data);
}

TEST_CASE("sequential datasets fit the sequential super-policy") {
  Options o;
  o.set("spec", "sequential");
  o.set("n", "300");
  o.set("seed", "3");
  superpol_dataset* data = nullptr;
  REQUIRE(superpol_generate(o.h, &data) == SUPERPOL_OK);
  superpol_dataset_info info{};
  superpol_dataset_info_get(data, &info);
  CHECK(info.sequential == 1);
  CHECK(info.horizon == 2);
  superpol_model* model = nullptr;
  REQUIRE(superpol_fit(data, o.h, &model) == SUPERPOL_OK);
  char* dump = nullptr;
  REQUIRE(superpol_model_dump(model, &dump) == SUPERPOL_OK);
  CHECK(take(dump).find("kind=superseq") != std::string::npos);
  const double obs[] = {0.1, -0.2};
  const int own[] = {1};
  const int behavior[] = {0, 1};
  int action = -1;
  REQUIRE(superpol_model_act_seq(model, 2, obs, 2, own, behavior, &action) == SUPERPOL_OK);
  CHECK((action == 0 || action == 1));
  CHECK(superpol_model_act_seq(model, 3, obs, 2, own, behavior, &action) ==
        SUPERPOL_INVALID_ARGUMENT);
  superpol_model_free(model);
  superpol_dataset_free(data);
}

TEST_CASE("missing files and null handles report errors") {
  superpol_dataset* d = nullptr;
  CHECK(superpol_dataset_load("/nonexistent/superpol.csv", &d) == SUPERPOL_IO);
  CHECK(d == nullptr);
  superpol_dataset_info info{};
  CHECK(superpol_dataset_info_get(nullptr, &info) == SUPERPOL_INVALID_ARGUMENT);
  superpol_dataset_free(nullptr);
  superpol_model_free(nullptr);
  superpol_options_free(nullptr);
  superpol_string_free(nullptr);
}

TEST_CASE("regret and split evaluation return reports") {
  Options o;
  o.set("spec", "toy");
  o.set("eps", "0.5");
  o.set("n", "500");
  o.set("reps", "2");
  char* csv = nullptr;
  char* md = nullptr;
  REQUIRE(superpol_regret(o.h, &csv, &md) == SUPERPOL_OK);
  CHECK(take(csv).rfind("kind,setting,mean,sd,n_reps\n", 0) == 0);
  CHECK(take(md).rfind("| setting |", 0) == 0);
  superpol_dataset* data = nullptr;
  REQUIRE(superpol_generate(o.h, &data) == SUPERPOL_OK);
  o.set("splits", "3");
  REQUIRE(superpol_split_evaluate(data, o.h, &csv, &md) == SUPERPOL_OK);
  CHECK(take(csv).find("behavior") != std::string::npos);
  take(md);
  superpol_dataset_free(data);
}

TEST_CASE("selfcheck passes") {
  int lines = 0;
  int failures = -1;
  auto count = [](const char*, void* user) { ++*static_cast<int*>(user); };
  REQUIRE(superpol_selfcheck(count, &lines, &failures) == SUPERPOL_OK);
  CHECK(failures == 0);
  CHECK(lines > 0);
}
