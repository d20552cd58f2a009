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

#include "memwalk/experiment.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "memwalk/errors.hpp"
#include "memwalk/regeneration.hpp"

namespace memwalk {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string k_sequence_digest(std::span<const std::int64_t> ks) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 unavailable");
  }
  unsigned char buf[8 * 512];
  std::size_t fill = 0;
  for (std::int64_t k : ks) {
    auto u = static_cast<std::uint64_t>(k);
    for (int b = 0; b < 8; ++b) buf[fill++] = static_cast<unsigned char>(u >> (8 * b));
    if (fill == sizeof(buf)) {
      EVP_DigestUpdate(ctx.get(), buf, fill);
      fill = 0;
    }
  }
  if (fill) EVP_DigestUpdate(ctx.get(), buf, fill);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

AnalysisOptions analysis_options(const ExperimentConfig& cfg) {
  AnalysisOptions o;
  o.regen = cfg.analyze_regen;
  o.clt = cfg.analyze_clt;
  o.returns = cfg.analyze_returns;
  o.tail = cfg.analyze_tail;
  o.return_cutoff = cfg.return_cutoff;
  o.alpha = cfg.alpha;
  o.clt_min_replicas = cfg.clt_min_replicas;
  return o;
}

namespace {

bool wants_regen(const ExperimentConfig& cfg) { return cfg.analyze_regen || cfg.analyze_tail; }

}  // namespace

ReplicaRecord run_replica(const ExperimentConfig& cfg, std::int64_t replica) {
  auto streams = ReplicaStreams::derive(cfg.master_seed, static_cast<std::uint64_t>(replica));
  WalkConfig w = cfg.walk;
  w.seed = cfg.master_seed;
  w.keep_k_sequence = false;

  std::vector<std::int64_t> ks;
  if (w.engine != EngineKind::kOrrw) {
    ks.resize(static_cast<std::size_t>(w.horizon));
    for (auto& k : ks) k = w.memory.sample(streams.memory);
  }

  ReplicaRecord rec;
  rec.replica = replica;
  RunOptions opts;
  opts.k_sequence = ks;
  if (wants_regen(cfg)) {
    rec.regen = detect_offline(ks, confirmation_window(w.memory, cfg.numerics.confirmation));
    opts.record_at = rec.regen.regen_indices;
  }
  auto result = run(w, streams, opts);
  auto& s = result.summary;
  rec.final_position = std::move(s.final_position);
  rec.returns = s.returns;
  rec.last_return = s.last_return;
  rec.checkpoints = std::move(s.checkpoints);
  if (wants_regen(cfg)) {
    (void)extract_subwalk(s.recorded, rec.regen);
    rec.regen.pending.clear();
  }
  rec.k_digest = k_sequence_digest(ks);
  return rec;
}

Ensemble run_ensemble(const ExperimentConfig& cfg, int workers) {
  if (workers < 1) throw UsageError("workers must be >= 1");
  Ensemble ens;
  ens.dimension = cfg.walk.dimension;
  ens.horizon = cfg.walk.horizon;
  ens.checkpoints = cfg.walk.checkpoints;
  ens.replicas.resize(static_cast<std::size_t>(cfg.replicas));

  std::atomic<std::int64_t> next{0};
  std::vector<std::exception_ptr> errors(ens.replicas.size());
  auto work = [&] {
    for (std::int64_t r = next++; r < cfg.replicas; r = next++) {
      try {
        ens.replicas[r] = run_replica(cfg, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const int n = static_cast<int>(std::min<std::int64_t>(workers, cfg.replicas));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return ens;
}

namespace {

json site_json(const Site& s) { return s.coords; }

Site site_from(const json& j, int dimension) {
  Site s;
  s.coords = j.get<std::vector<std::int64_t>>();
  if (static_cast<int>(s.coords.size()) != dimension) {
    throw ConfigError("position has " + std::to_string(s.coords.size()) + " coordinates, expected " +
                      std::to_string(dimension));
  }
  return s;
}

std::string join_ints(std::span<const std::int64_t> v, char sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::int64_t> split_ints(std::string_view s, char sep) {
  std::vector<std::int64_t> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    const auto tok = s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw ConfigError("malformed integer '" + std::string(tok) + "'");
    }
    out.push_back(v);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find(sep, start);
    out.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ordered_json replica_to_json(const ReplicaRecord& rec, bool with_regen) {
  ordered_json j;
  j["replica"] = rec.replica;
  j["final"] = site_json(rec.final_position);
  j["returns"] = rec.returns;
  j["last_return"] = rec.last_return;
  j["regens"] = rec.regen.regen_indices;
  j["censored_from"] = with_regen ? ordered_json(rec.regen.censored_from) : ordered_json(nullptr);
  j["K_seq_digest"] = rec.k_digest;
  auto cps = ordered_json::array();
  for (const auto& [n, s] : rec.checkpoints) {
    auto row = ordered_json::array({n});
    for (auto c : s.coords) row.push_back(c);
    cps.push_back(std::move(row));
  }
  j["checkpoints"] = std::move(cps);
  auto incs = ordered_json::array();
  for (const auto& inc : rec.regen.increments) {
    auto row = ordered_json::array({inc.dt});
    for (auto c : inc.dy) row.push_back(c);
    incs.push_back(std::move(row));
  }
  j["increments"] = std::move(incs);
  return j;
}

ReplicaRecord replica_from_json(const json& j, int dimension) {
  ReplicaRecord rec;
  try {
    rec.replica = j.at("replica").get<std::int64_t>();
    rec.final_position = site_from(j.at("final"), dimension);
    rec.returns = j.at("returns").get<std::int64_t>();
    rec.last_return = j.at("last_return").get<std::int64_t>();
    rec.regen.regen_indices = j.at("regens").get<std::vector<std::int64_t>>();
    if (!j.at("censored_from").is_null()) rec.regen.censored_from = j.at("censored_from").get<std::int64_t>();
    rec.k_digest = j.at("K_seq_digest").get<std::string>();
    for (const auto& row : j.at("checkpoints")) {
      auto v = row.get<std::vector<std::int64_t>>();
      if (static_cast<int>(v.size()) != dimension + 1) throw ConfigError("malformed checkpoint row");
      rec.checkpoints.emplace_back(v[0], Site{std::vector<std::int64_t>(v.begin() + 1, v.end())});
    }
    for (const auto& row : j.at("increments")) {
      auto v = row.get<std::vector<std::int64_t>>();
      if (static_cast<int>(v.size()) != dimension + 1) throw ConfigError("malformed increment row");
      rec.regen.increments.push_back({v[0], std::vector<std::int64_t>(v.begin() + 1, v.end())});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed replica row: ") + e.what());
  }
  return rec;
}

std::string replica_csv_header() {
  return "replica,returns,last_return,censored_from,K_seq_digest,final,regens,checkpoints,increments";
}

std::string replica_to_csv(const ReplicaRecord& rec, bool with_regen) {
  std::string out = std::to_string(rec.replica) + "," + std::to_string(rec.returns) + "," +
                    std::to_string(rec.last_return) + "," +
                    (with_regen ? std::to_string(rec.regen.censored_from) : std::string()) + "," + rec.k_digest +
                    "," + join_ints(rec.final_position.coords, ' ') + "," +
                    join_ints(rec.regen.regen_indices, ' ') + ",";
  for (std::size_t i = 0; i < rec.checkpoints.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(rec.checkpoints[i].first) + ":" + join_ints(rec.checkpoints[i].second.coords, ' ');
  }
  out += ',';
  for (std::size_t i = 0; i < rec.regen.increments.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(rec.regen.increments[i].dt) + ":" + join_ints(rec.regen.increments[i].dy, ' ');
  }
  return out;
}

ReplicaRecord replica_from_csv(const std::string& line, int dimension) {
  const auto f = split(line, ',');
  if (f.size() != 9) throw ConfigError("replica row has " + std::to_string(f.size()) + " fields, expected 9");
  auto one = [](std::string_view s) {
    const auto v = split_ints(s, ' ');
    if (v.size() != 1) throw ConfigError("malformed integer field '" + std::string(s) + "'");
    return v[0];
  };
  auto pair_list = [dimension](std::string_view s) {
    std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> out;
    for (auto item : split(s, ';')) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) throw ConfigError("malformed entry '" + std::string(item) + "'");
      auto head = split_ints(item.substr(0, colon), ' ');
      auto tail = split_ints(item.substr(colon + 1), ' ');
      if (head.size() != 1 || static_cast<int>(tail.size()) != dimension) {
        throw ConfigError("malformed entry '" + std::string(item) + "'");
      }
      out.emplace_back(head[0], std::move(tail));
    }
    return out;
  };
  ReplicaRecord rec;
  rec.replica = one(f[0]);
  rec.returns = one(f[1]);
  rec.last_return = one(f[2]);
  if (!f[3].empty()) rec.regen.censored_from = one(f[3]);
  rec.k_digest = std::string(f[4]);
  rec.final_position.coords = split_ints(f[5], ' ');
  if (static_cast<int>(rec.final_position.coords.size()) != dimension) throw ConfigError("malformed final position");
  rec.regen.regen_indices = split_ints(f[6], ' ');
  for (auto& [n, v] : pair_list(f[7])) rec.checkpoints.emplace_back(n, Site{std::move(v)});
  for (auto& [dt, v] : pair_list(f[8])) rec.regen.increments.push_back({dt, std::move(v)});
  return rec;
}

namespace {

ordered_json num(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(format_double(x)); }

ordered_json nums(const std::vector<double>& v) {
  auto out = ordered_json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

}  // namespace

ordered_json summary_to_json(const PooledSummary& s) {
  ordered_json j;
  auto msd = ordered_json::array();
  for (const auto& p : s.msd) msd.push_back({{"n", p.n}, {"mean", num(p.mean)}, {"se", num(p.se)}});
  j["msd"] = std::move(msd);
  if (s.returns) {
    j["returns"] = {{"replicas", s.returns->replicas},
                    {"cutoff", s.returns->cutoff},
                    {"mean_returns", num(s.returns->mean_returns)},
                    {"se_returns", num(s.returns->se_returns)},
                    {"fraction_after_cutoff", num(s.returns->fraction_after_cutoff)}};
  }
  if (s.clt) {
    const auto& c = *s.clt;
    j["clt"] = {{"n", c.n},
                {"replicas", c.replicas},
                {"sigma_hat", num(c.sigma_hat)},
                {"sigma_se", num(c.sigma_se)},
                {"axis_sigma", nums(c.axis_sigma)},
                {"normality", c.normality},
                {"isotropy", c.isotropy},
                {"nondegenerate", c.nondegenerate},
                {"diagnostic", c.diagnostic}};
  }
  if (s.regen) {
    const auto& r = *s.regen;
    j["regen"] = {{"increments", r.increments},
                  {"mean_dt", num(r.mean_dt)},
                  {"se_dt", num(r.se_dt)},
                  {"halves_ks_statistic", num(r.halves.statistic)},
                  {"halves_ks_p_value", num(r.halves.p_value)},
                  {"dy_mean", nums(r.dy_mean)},
                  {"dy_se", nums(r.dy_se)},
                  {"dy_centered", r.dy_centered}};
  }
  if (s.tail) {
    j["tail"] = {{"estimate", num(s.tail->estimate)},
                 {"se", num(s.tail->se)},
                 {"k", s.tail->k},
                 {"heavy_tail", s.tail->heavy_tail}};
  }
  auto tests = ordered_json::array();
  for (const auto& t : s.tests) {
    tests.push_back({{"name", t.name},
                     {"statistic", num(t.statistic)},
                     {"p_value", num(t.p_value)},
                     {"threshold", t.threshold},
                     {"passed", t.passed}});
  }
  j["tests"] = std::move(tests);
  return j;
}

std::string summary_csv(const PooledSummary& s) {
  std::string out = "checkpoint,msd_mean,msd_se\n";
  for (const auto& p : s.msd) {
    out += std::to_string(p.n) + "," + format_double(p.mean) + "," + format_double(p.se) + "\n";
  }
  return out;
}

std::string tests_csv(const PooledSummary& s) {
  std::string out = "test,statistic,p_value,threshold,passed\n";
  for (const auto& t : s.tests) {
    out += csv_field(t.name) + "," + format_double(t.statistic) + "," + format_double(t.p_value) + "," +
           csv_field(t.threshold) + "," + (t.passed ? "true" : "false") + "\n";
  }
  return out;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw ResourceError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_run(const ExperimentConfig& cfg, const Ensemble& ensemble, const PooledSummary& summary) {
  fs::create_directories(cfg.outputs);
  const bool regen = wants_regen(cfg);

  ordered_json run;
  run["tool"] = "memwalk";
  run["format_version"] = 1;
  run["replicas"] = cfg.replicas;
  run["master_seed"] = cfg.master_seed;
  run["law"] = cfg.walk.memory.describe();
  run["engine"] = to_string(cfg.walk.engine);
  run["replica_file"] = cfg.format == OutputFormat::kCsv ? RunArtifacts::kReplicasCsv : RunArtifacts::kReplicasJsonl;
  run["config"] = cfg.to_text();
  write_file_atomic(cfg.outputs / RunArtifacts::kRunJson, run.dump(2) + "\n");

  std::string table;
  if (cfg.format == OutputFormat::kCsv) {
    table = replica_csv_header() + "\n";
    for (const auto& rec : ensemble.replicas) table += replica_to_csv(rec, regen) + "\n";
    write_file_atomic(cfg.outputs / RunArtifacts::kReplicasCsv, table);
  } else {
    for (const auto& rec : ensemble.replicas) table += replica_to_json(rec, regen).dump() + "\n";
    write_file_atomic(cfg.outputs / RunArtifacts::kReplicasJsonl, table);
  }
  write_file_atomic(cfg.outputs / RunArtifacts::kSummaryCsv, summary_csv(summary));
  write_file_atomic(cfg.outputs / RunArtifacts::kTestsCsv, tests_csv(summary));
  write_file_atomic(cfg.outputs / RunArtifacts::kSummaryJson, summary_to_json(summary).dump(2) + "\n");
}

LoadedRun load_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("run directory '" + dir.string() + "' does not exist");
  const fs::path run_path = dir / RunArtifacts::kRunJson;
  std::vector<std::string> missing;
  if (!fs::exists(run_path)) missing.push_back(RunArtifacts::kRunJson);
  json run;
  if (missing.empty()) {
    std::ifstream in(run_path);
    try {
      run = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(run_path.string() + ": " + e.what());
    }
  }
  std::string replica_file = run.is_object() && run.contains("replica_file")
                                 ? run["replica_file"].get<std::string>()
                                 : std::string(RunArtifacts::kReplicasJsonl);
  if (!fs::exists(dir / replica_file)) {
    if (!missing.empty() && fs::exists(dir / RunArtifacts::kReplicasCsv)) {
      replica_file = RunArtifacts::kReplicasCsv;
    } else {
      missing.push_back(replica_file);
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing input files in '" + dir.string() + "':";
    for (const auto& m : missing) msg += " " + m;
    throw ConfigError(msg);
  }

  LoadedRun out;
  try {
    out.config = ExperimentConfig::from_kv(KeyValueConfig::parse(run.at("config").get<std::string>()));
  } catch (const json::exception& e) {
    throw ConfigError(run_path.string() + ": " + e.what());
  }
  out.config.outputs = dir;
  const int d = out.config.walk.dimension;
  out.ensemble.dimension = d;
  out.ensemble.horizon = out.config.walk.horizon;
  out.ensemble.checkpoints = out.config.walk.checkpoints;

  std::ifstream in(dir / replica_file, std::ios::binary);
  std::string line;
  int line_no = 0;
  const bool csv = replica_file == RunArtifacts::kReplicasCsv;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (csv && line_no == 1) {
      if (line != replica_csv_header()) throw ConfigError(replica_file + ": unexpected header", 1);
      continue;
    }
    try {
      out.ensemble.replicas.push_back(csv ? replica_from_csv(line, d) : replica_from_json(json::parse(line), d));
    } catch (const json::exception& e) {
      throw ConfigError(replica_file + ": " + e.what(), line_no);
    } catch (const ConfigError& e) {
      throw ConfigError(replica_file + ": " + e.what(), line_no);
    }
    out.ensemble.replicas.back().regen.horizon = out.config.walk.horizon - 1;
  }
  if (static_cast<std::int64_t>(out.ensemble.replicas.size()) != out.config.replicas) {
    throw ConfigError(replica_file + ": found " + std::to_string(out.ensemble.replicas.size()) +
                      " replicas, run.json declares " + std::to_string(out.config.replicas));
  }
  return out;
}

}  // namespace memwalk
