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

#include "superpol/repro.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "superpol/error.hpp"
#include "superpol/io.hpp"
#include "superpol/version.hpp"

namespace superpol {
namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

ExperimentReport toy_report(const TableConfig& cfg) {
  ExperimentReport report;
  report.metric = "value";
  for (double eps : cfg.settings) {
    const ToyValues v = toy_values(eps);
    const std::string label = setting_label(cfg, eps);
    for (const auto& [kind, value] : {std::pair{"behavior", v.behavior},
                                      std::pair{"standard", v.standard},
                                      std::pair{"super", v.super}}) {
      report.rows.push_back(ReportRow{kind, label, value, 0.0, 1});
      report.samples.push_back({value});
    }
  }
  return report;
}

std::optional<std::size_t> row_index(const ExperimentReport& r, std::string_view kind,
                                     std::string_view setting) {
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    if (r.rows[k].kind == kind && r.rows[k].setting == setting) return k;
  }
  return std::nullopt;
}

}  // namespace

bool is_known_table(std::string_view table) {
  return table == "table1" || table == "table2" || table == "table3" || table == "table4";
}

ReproResult run_table(TableConfig cfg, const ReproOptions& options) {
  if (options.reps) cfg.reps = *options.reps;
  if (options.seed) cfg.seed = *options.seed;
  cfg.check();
  require(options.jobs >= 1, "jobs must be >= 1");
  const auto say = [&](const std::string& line) {
    if (options.progress) options.progress(line);
  };

  ReproResult result;
  json references = json::object();
  if (cfg.spec == "toy") {
    result.report = toy_report(cfg);
  } else {
    result.report.metric = "regret";
    for (std::size_t k = 0; k < cfg.settings.size(); ++k) {
      const ExperimentConfig e = make_experiment(cfg, k, options.jobs);
      say(cfg.table + ": " + e.setting + " (" + std::to_string(cfg.reps) +
          " replications)");
      const ExperimentReport part = run_replications(e);
      references[e.setting] = part.reference_value;
      result.report.append(part);
    }
    result.report.seeds.clear();
    for (int i = 0; i < cfg.reps; ++i) result.report.seeds.push_back(cfg.seed + i);
  }

  RenderOptions render_opts;
  render_opts.decimals = cfg.decimals;
  render_opts.show_sd = cfg.show_sd;
  result.csv = render(result.report, ReportFormat::kCsv);

  std::ostringstream md;
  md << "# " << cfg.table << "\n\n";
  if (!cfg.banner.empty()) md << "> " << cfg.banner << "\n\n";
  md << (result.report.metric == "regret" ? "Mean regret (standard deviation) over "
                                           : "Policy values by exact enumeration")
     << (result.report.metric == "regret" ? std::to_string(cfg.reps) + " replications" : "")
     << "; * marks the best entry of each row.\n\n";
  md << render(result.report, ReportFormat::kMarkdown, render_opts);

  std::ostringstream summary;
  summary << render(result.report, ReportFormat::kMarkdown, render_opts);
  const bool sequential_pair =
      std::count(cfg.kinds.begin(), cfg.kinds.end(), PolicyClass::kCommon) > 0 &&
      std::count(cfg.kinds.begin(), cfg.kinds.end(), PolicyClass::kSuperSeq) > 0;
  if (cfg.spec == "sequential" && sequential_pair && cfg.reps >= 2) {
    for (double setting : cfg.settings) {
      const std::string label = setting_label(cfg, setting);
      const auto common = row_index(result.report, "common", label);
      const auto super = row_index(result.report, "superseq", label);
      const PairedTest t = paired_t_test(result.report.samples[*common],
                                         result.report.samples[*super]);
      result.test = t;
      std::ostringstream line;
      line << label << ": mean regret superseq " << fixed(result.report.rows[*super].mean, 4)
           << " vs common " << fixed(result.report.rows[*common].mean, 4)
           << "; one-sided paired t-test (common > superseq): t = " << fixed(t.t, 3)
           << ", df = " << t.df << ", p = " << format_double(t.p_value)
           << (t.mean_difference > 0.0 && t.p_value < 0.01 ? " [superseq better]"
                                                            : " [no significant gain]");
      md << "\n" << line.str() << "\n";
      summary << line.str() << "\n";
    }
  }
  result.markdown = md.str();
  if (!cfg.banner.empty()) result.summary = cfg.banner + "\n";
  result.summary += summary.str();

  const std::string config_text = to_json(cfg);
  json prov = {
      {"tool", std::string("superpol ") + kVersion},
      {"command", "repro " + cfg.table},
      {"config", json::parse(config_text)},
      {"config_hash", "fnv1a64:" + hex64(fnv1a64(config_text))},
      {"replication_seeds", {{"first", cfg.seed}, {"count", cfg.reps}}},
      {"reference_values", references},
      {"outputs",
       {{cfg.table + ".csv", "fnv1a64:" + hex64(fnv1a64(result.csv))},
        {cfg.table + ".md", "fnv1a64:" + hex64(fnv1a64(result.markdown))}}},
  };
  result.provenance = prov.dump(2) + "\n";
  result.config = cfg;

  const std::filesystem::path dir(options.out_dir);
  const std::vector<std::pair<std::string, const std::string*>> outputs{
      {cfg.table + ".csv", &result.csv},
      {cfg.table + ".md", &result.markdown},
      {cfg.table + ".provenance.json", &result.provenance}};
  for (const auto& [name, text] : outputs) {
    const std::string path = (dir / name).string();
    write_file_atomic(path, *text);
    result.files.push_back(path);
  }
  return result;
}

ReproResult repro(std::string_view table, const ReproOptions& options) {
  require(is_known_table(table) || !options.config_path.empty(),
          "unknown table '" + std::string(table) + "'");
  const std::string path =
      options.config_path.empty() ? shipped_config_path(table) : options.config_path;
  TableConfig cfg = load_table_config(path);
  if (is_known_table(table)) cfg.table = std::string(table);
  return run_table(std::move(cfg), options);
}

}  // namespace superpol
