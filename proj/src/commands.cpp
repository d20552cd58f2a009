// Copyright 2026 The memwalk Authors.
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

#include "memwalk/commands.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "memwalk/errors.hpp"
#include "memwalk/experiment.hpp"
#include "memwalk/memory_law.hpp"

namespace memwalk {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

std::string fixed(double x, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

}  // namespace

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    start = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("parameter '" + item + "' is not name=value");
    double v = 0.0;
    const char* b = item.data() + eq + 1;
    const char* e = item.data() + item.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw UsageError("parameter '" + item + "' has a non-numeric value");
    out[item.substr(0, eq)] = v;
  }
  return out;
}

void print_summary(std::ostream& out, const PooledSummary& s) {
  out << "checkpoint  msd_mean  msd_se\n";
  for (const auto& p : s.msd) out << p.n << "  " << fixed(p.mean) << "  " << fixed(p.se) << "\n";
  if (s.returns) {
    out << "returns: mean " << fixed(s.returns->mean_returns) << " (se " << fixed(s.returns->se_returns)
        << "), fraction returning after " << s.returns->cutoff << ": " << fixed(s.returns->fraction_after_cutoff)
        << "\n";
  }
  if (s.clt) {
    out << "clt at n=" << s.clt->n << ": sigma_hat " << fixed(s.clt->sigma_hat) << " (se "
        << fixed(s.clt->sigma_se) << ")";
    if (!s.clt->diagnostic.empty()) out << ", " << s.clt->diagnostic;
    out << "\n";
  }
  if (s.regen) {
    out << "regeneration: " << s.regen->increments << " increments, mean dt " << fixed(s.regen->mean_dt)
        << " (se " << fixed(s.regen->se_dt) << ")\n";
  }
  if (s.tail) {
    out << "tail index (Hill, k=" << s.tail->k << "): " << fixed(s.tail->estimate) << " (se "
        << fixed(s.tail->se) << ")" << (s.tail->heavy_tail ? "" : ", light tail") << "\n";
  }
  for (const auto& t : s.tests) {
    out << (t.passed ? "PASS " : "FAIL ") << t.name << "  statistic " << fixed(t.statistic);
    if (!std::isnan(t.p_value)) out << "  p " << fixed(t.p_value);
    out << "  [" << t.threshold << "]\n";
  }
}

int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto cfg = ExperimentConfig::load(req.config);
    if (req.seed) cfg.master_seed = *req.seed;
    if (req.format) cfg.format = *req.format;
    if (req.outputs) cfg.outputs = *req.outputs;
    if (req.workers < 1) throw UsageError("--workers must be >= 1");
    const auto ensemble = run_ensemble(cfg, req.workers);
    const auto summary = summarize(ensemble, analysis_options(cfg));
    write_run(cfg, ensemble, summary);
    out << "memwalk run: " << cfg.replicas << " replicas of " << to_string(cfg.walk.engine) << " d="
        << cfg.walk.dimension << " delta=" << cfg.walk.delta << " K~" << cfg.walk.memory.describe()
        << " horizon=" << cfg.walk.horizon << "\n";
    print_summary(out, summary);
    out << "outputs written to " << cfg.outputs.string() << "\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_exact(const ExactRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (req.kmax < 0) throw UsageError("--kmax must be >= 0");
    const auto law = MemoryLaw::from_params(req.family, req.params);
    out << "law: " << law.describe() << "\n";
    for (int m = 1; m <= 4; ++m) {
      out << "E[K^" << m << "]: " << (law.moment_finite(m) ? "finite" : "infinite") << "\n";
    }
    if (!law.moment_finite(1)) {
      out << "P[tau_1<inf]=0 regime: E[K] is infinite, so P[tau_1=1]=0 and regeneration times do not exist\n";
      return static_cast<int>(kExitOk);
    }
    if (law.pmf(0) == 0.0) {
      out << "P[tau_1<inf]=0 regime: P[K=0]=0, so no step can start a regeneration\n";
      return static_cast<int>(kExitOk);
    }
    const double p = prob_regen_at_fixed_time(law);
    out << "P[tau_1=1] = " << std::setprecision(15) << p << "\n";
    if (p >= 1.0) {
      out << "K = 0 almost surely: every step regenerates and S_1 = inf\n";
      return static_cast<int>(kExitOk);
    }
    const auto table = s1_conditional_pmf_table(law, req.kmax);
    out << "k  P[S_1=k | S_1<inf]  cumulative\n";
    double cum = 0.0;
    for (std::size_t k = 0; k < table.size(); ++k) {
      cum += table[k];
      out << k << "  " << std::setprecision(12) << table[k] << "  " << cum << "\n";
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_analyze(const AnalyzeRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto loaded = load_run(req.dir);
    auto opts = analysis_options(loaded.config);
    const bool had_regen = loaded.config.analyze_regen || loaded.config.analyze_tail;
    if (req.regen) opts.regen = *req.regen;
    if (req.clt) opts.clt = *req.clt;
    if (req.returns) opts.returns = *req.returns;
    if (req.tail) opts.tail = *req.tail;
    if (opts.clt && loaded.ensemble.checkpoints.empty()) {
      throw ConfigError("clt analysis needs checkpoint positions, but the run in '" + req.dir.string() +
                        "' recorded none; rerun with checkpoints = [...]");
    }
    if ((opts.regen || opts.tail) && !had_regen) {
      throw ConfigError("regeneration analysis needs regeneration data, but the run in '" + req.dir.string() +
                        "' was made without it; rerun with analysis.regen = true");
    }
    const auto summary = summarize(loaded.ensemble, opts);
    write_file_atomic(req.dir / "analysis.json", summary_to_json(summary).dump(2) + "\n");
    write_file_atomic(req.dir / "analysis_summary.csv", summary_csv(summary));
    write_file_atomic(req.dir / "analysis_tests.csv", tests_csv(summary));
    out << "memwalk analyze: " << loaded.ensemble.replicas.size() << " replicas from " << req.dir.string() << "\n";
    print_summary(out, summary);
    return static_cast<int>(kExitOk);
  });
}

namespace {

std::string value_label(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::kNumber: return v.integral ? std::to_string(v.integer) : format_double(v.number);
    case ConfigValue::Kind::kBool: return v.boolean ? "true" : "false";
    default: return v.text;
  }
}

std::string dir_name(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '=' || c == '-' || c == '_';
    out += c == ',' ? '+' : keep ? c : '_';
  }
  return out;
}

}  // namespace

std::vector<SweepCell> expand_sweep(const KeyValueConfig& grid) {
  std::vector<std::pair<std::string, const ConfigValue*>> axes;
  for (const auto& [key, value] : grid.values()) {
    if (key.rfind("sweep.", 0) != 0) continue;
    const std::string target = key.substr(6);
    if (!experiment_keys().count(target) || target == "outputs") {
      throw ConfigError("cannot sweep over '" + target + "'", value.line);
    }
    if (value.kind != ConfigValue::Kind::kArray || value.items.empty()) {
      throw ConfigError(key + " must be a non-empty array", value.line);
    }
    axes.emplace_back(target, &value);
  }
  if (axes.empty()) throw ConfigError("grid has no [sweep] arrays");

  std::vector<SweepCell> cells(1);
  for (const auto& [key, value] : axes) {
    std::vector<SweepCell> next;
    for (const auto& cell : cells) {
      for (const auto& item : value->items) {
        SweepCell c = cell;
        c.values[key] = item;
        c.label += (c.label.empty() ? "" : ",") + key + "=" + value_label(item);
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  std::map<std::string, std::string> seen;
  for (auto& c : cells) {
    c.dir = dir_name(c.label);
    if (!seen.emplace(c.dir, c.label).second) {
      int line = 0;
      for (const auto& [key, value] : axes) line = std::max(line, value->line);
      throw ConfigError("duplicate sweep cell '" + c.label + "' (also produced as '" + seen[c.dir] + "')", line);
    }
  }
  return cells;
}

int cmd_sweep(const SweepRequest& req, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (req.workers < 1) throw UsageError("--workers must be >= 1");
    const auto grid = KeyValueConfig::load(req.grid);
    std::vector<SweepCell> cells;
    try {
      cells = expand_sweep(grid);
      (void)ExperimentConfig::from_kv(grid);  // base must be valid on its own
    } catch (const ConfigError& e) {
      throw ConfigError(req.grid.string() + ": " + e.what());
    }
    const fs::path root = grid.get_string("outputs", "memwalk_sweep");
    fs::create_directories(root);
    const fs::path manifest_path = root / "manifest.json";

    std::map<std::string, std::string> previous;
    if (fs::exists(manifest_path)) {
      std::ifstream in(manifest_path);
      try {
        const auto m = json::parse(in);
        for (const auto& c : m.at("cells")) previous[c.at("label").get<std::string>()] = c.at("status").get<std::string>();
      } catch (const json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
      }
    }

    std::vector<std::string> status(cells.size(), "pending");
    std::vector<std::string> errors(cells.size());
    auto save = [&] {
      ordered_json m;
      m["grid"] = req.grid.generic_string();
      auto arr = ordered_json::array();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        ordered_json params = ordered_json::object();
        for (const auto& [key, value] : cells[i].values) params[key] = value_label(value);
        ordered_json c{{"label", cells[i].label}, {"params", std::move(params)}, {"dir", cells[i].dir},
                       {"status", status[i]}};
        if (!errors[i].empty()) c["error"] = errors[i];
        arr.push_back(std::move(c));
      }
      m["cells"] = std::move(arr);
      write_file_atomic(manifest_path, m.dump(2) + "\n");
    };

    int failed = 0;
    int skipped = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& cell = cells[i];
      const fs::path dir = root / cell.dir;
      auto it = previous.find(cell.label);
      if (it != previous.end() && it->second == "done" && fs::exists(dir / RunArtifacts::kSummaryJson)) {
        status[i] = "done";
        ++skipped;
        out << "skip  " << cell.label << " (already complete)\n";
        continue;
      }
      try {
        KeyValueConfig kv = grid;
        for (const auto& [key, value] : cell.values) kv.set(key, value);
        auto cfg = ExperimentConfig::from_kv(kv);
        cfg.outputs = dir;
        const auto ensemble = run_ensemble(cfg, req.workers);
        const auto summary = summarize(ensemble, analysis_options(cfg));
        write_run(cfg, ensemble, summary);
        status[i] = "done";
        out << "done  " << cell.label << "\n";
      } catch (const std::exception& e) {
        status[i] = "failed";
        errors[i] = e.what();
        ++failed;
        out << "FAIL  " << cell.label << ": " << e.what() << "\n";
      }
      save();
    }
    save();
    out << "sweep: " << cells.size() << " cells, " << skipped << " skipped, " << failed << " failed\n";
    return failed ? static_cast<int>(kExitFailure) : static_cast<int>(kExitOk);
  });
}

}  // namespace memwalk
