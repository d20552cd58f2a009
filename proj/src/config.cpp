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

#include "memwalk/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "memwalk/errors.hpp"

namespace memwalk {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  }
  return true;
}

// Strips a trailing comment outside of quotes.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_scalar(std::string_view tok, int line) {
  ConfigValue v;
  v.line = line;
  tok = trim(tok);
  if (tok.empty()) throw ConfigError("missing value", line);
  if (tok.front() == '"') {
    if (tok.size() < 2 || tok.back() != '"') throw ConfigError("unterminated string", line);
    v.kind = ConfigValue::Kind::kString;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
      if (tok[i] == '\\' && i + 2 < tok.size()) {
        const char e = tok[++i];
        v.text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        v.text += tok[i];
      }
    }
    return v;
  }
  v.text = std::string(tok);
  if (tok == "true" || tok == "false") {
    v.kind = ConfigValue::Kind::kBool;
    v.boolean = tok == "true";
    return v;
  }
  std::string digits;
  for (char c : tok) {
    if (c != '_') digits += c;
  }
  const char* b = digits.data();
  const char* e = b + digits.size();
  if (*b == '+') ++b;
  std::int64_t iv = 0;
  if (auto [p, ec] = std::from_chars(b, e, iv); ec == std::errc() && p == e) {
    v.kind = ConfigValue::Kind::kNumber;
    v.integral = true;
    v.integer = iv;
    v.number = static_cast<double>(iv);
    return v;
  }
  double dv = 0.0;
  if (auto [p, ec] = std::from_chars(b, e, dv); ec == std::errc() && p == e) {
    v.kind = ConfigValue::Kind::kNumber;
    v.number = dv;
    v.integral = dv == static_cast<double>(static_cast<std::int64_t>(dv)) && std::abs(dv) < 9.0e18;
    v.integer = static_cast<std::int64_t>(dv);
    return v;
  }
  throw ConfigError("cannot parse value '" + std::string(tok) + "' (strings need double quotes)", line);
}

ConfigValue parse_value(std::string_view tok, int line) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '[') {
    if (tok.back() != ']') throw ConfigError("unterminated array", line);
    ConfigValue v;
    v.kind = ConfigValue::Kind::kArray;
    v.line = line;
    v.text = std::string(tok);
    std::string_view body = trim(tok.substr(1, tok.size() - 2));
    if (body.empty()) return v;
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '"') quoted = !quoted;
      if (i == body.size() || (body[i] == ',' && !quoted)) {
        auto item = trim(body.substr(start, i - start));
        if (item.empty() && i == body.size() && start > 0) break;  // trailing comma
        v.items.push_back(parse_scalar(item, line));
        start = i + 1;
      }
    }
    return v;
  }
  return parse_scalar(tok, line);
}

std::string kind_name(ConfigValue::Kind k) {
  switch (k) {
    case ConfigValue::Kind::kString: return "a string";
    case ConfigValue::Kind::kNumber: return "a number";
    case ConfigValue::Kind::kBool: return "true/false";
    case ConfigValue::Kind::kArray: return "an array";
  }
  return "?";
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      auto name = trim(line.substr(1, line.size() - 2));
      if (!valid_key(name)) throw ConfigError("invalid section name '" + std::string(name) + "'", line_no);
      section = std::string(name) + ".";
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("invalid key '" + std::string(key) + "'", line_no);
    const std::string full = section + std::string(key);
    if (cfg.values_.count(full)) {
      throw ConfigError("duplicate key '" + full + "' (first set on line " +
                            std::to_string(cfg.values_.at(full).line) + ")",
                        line_no);
    }
    cfg.values_[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

const ConfigValue& KeyValueConfig::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

int KeyValueConfig::line_of(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? 0 : it->second.line;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (v.kind != ConfigValue::Kind::kString) {
    throw ConfigError(key + " must be a string, got " + kind_name(v.kind), v.line);
  }
  return v.text;
}

double KeyValueConfig::get_number(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (v.kind != ConfigValue::Kind::kNumber) {
    throw ConfigError(key + " must be a number, got " + kind_name(v.kind), v.line);
  }
  return v.number;
}

std::int64_t KeyValueConfig::get_integer(const std::string& key, std::int64_t fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (v.kind != ConfigValue::Kind::kNumber || !v.integral) {
    throw ConfigError(key + " must be an integer", v.line);
  }
  return v.integer;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& v = at(key);
  if (v.kind != ConfigValue::Kind::kBool) throw ConfigError(key + " must be true or false", v.line);
  return v.boolean;
}

std::vector<std::int64_t> KeyValueConfig::get_integer_list(const std::string& key) const {
  if (!has(key)) return {};
  const auto& v = at(key);
  if (v.kind != ConfigValue::Kind::kArray) throw ConfigError(key + " must be an array of integers", v.line);
  std::vector<std::int64_t> out;
  for (const auto& item : v.items) {
    if (item.kind != ConfigValue::Kind::kNumber || !item.integral) {
      throw ConfigError(key + " must contain only integers", v.line);
    }
    out.push_back(item.integer);
  }
  return out;
}

std::map<std::string, double> KeyValueConfig::numbers_under(const std::string& prefix) const {
  std::map<std::string, double> out;
  const std::string p = prefix + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(p, 0) == 0 && v.kind == ConfigValue::Kind::kNumber) out[k.substr(p.size())] = v.number;
  }
  return out;
}

void KeyValueConfig::reject_unknown(const std::set<std::string>& known,
                                    const std::set<std::string>& known_prefixes) const {
  for (const auto& [k, v] : values_) {
    if (known.count(k)) continue;
    bool ok = false;
    for (const auto& p : known_prefixes) ok = ok || k.rfind(p + ".", 0) == 0;
    if (!ok) throw ConfigError("unknown key '" + k + "'", v.line);
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, p);
}

std::string to_string(OutputFormat f) { return f == OutputFormat::kCsv ? "csv" : "jsonl"; }

OutputFormat parse_format(const std::string& name) {
  if (name == "jsonl") return OutputFormat::kJsonl;
  if (name == "csv") return OutputFormat::kCsv;
  throw UsageError("format must be csv or jsonl, got '" + name + "'");
}

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys{
      "dimension", "delta", "engine", "horizon", "record_stride", "checkpoints", "replicas",
      "master_seed", "outputs", "format", "memory_budget_mb",
      "memory.family", "memory.k", "memory.p", "memory.p1", "memory.m", "memory.alpha",
      "kernel.name", "kernel.ellipticity_floor", "kernel.validate",
      "analysis.regen", "analysis.clt", "analysis.returns", "analysis.tail", "analysis.return_cutoff",
      "analysis.alpha", "analysis.clt_min_replicas", "analysis.confirmation_tolerance",
      "numerics.mass_tolerance", "numerics.product_tolerance"};
  return keys;
}

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
  kv.reject_unknown(experiment_keys(), {"sweep"});
  ExperimentConfig c;
  // Re-throws a UsageError from a validator as a ConfigError pinned to \p key.
  auto guard = [&kv](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const UsageError& e) {
      throw ConfigError(key + ": " + e.what(), kv.line_of(key));
    }
  };
  auto fail = [&kv](const std::string& key, const std::string& msg) {
    throw ConfigError(key + " " + msg, kv.line_of(key));
  };

  auto& w = c.walk;
  w.dimension = static_cast<int>(kv.get_integer("dimension", 3));
  if (w.dimension < 1 || w.dimension > kMaxDimension) {
    fail("dimension", "must lie in [1, " + std::to_string(kMaxDimension) + "]");
  }
  w.delta = kv.get_number("delta", 1.0);
  if (!(w.delta > 0.0)) fail("delta", "must be > 0");
  guard("engine", [&] { w.engine = parse_engine(kv.get_string("engine", "memory_walk")); });
  w.horizon = kv.get_integer("horizon", 1000);
  if (w.horizon < 1) fail("horizon", "must be >= 1");
  w.record_stride = kv.get_integer("record_stride", 0);
  if (w.record_stride < 0) fail("record_stride", "must be >= 0");
  w.checkpoints = kv.get_integer_list("checkpoints");
  for (std::size_t i = 0; i < w.checkpoints.size(); ++i) {
    if (w.checkpoints[i] < 0 || w.checkpoints[i] > w.horizon) fail("checkpoints", "must lie in [0, horizon]");
    if (i && w.checkpoints[i] <= w.checkpoints[i - 1]) fail("checkpoints", "must be strictly increasing");
  }
  if (kv.has("memory_budget_mb")) {
    const auto mb = kv.get_integer("memory_budget_mb", 0);
    if (mb < 1) fail("memory_budget_mb", "must be >= 1");
    w.memory_budget_bytes = static_cast<std::uint64_t>(mb) << 20;
  }

  const std::string family = kv.get_string("memory.family", "geometric");
  auto params = kv.numbers_under("memory");
  if (!kv.has("memory.family") && params.empty()) params["p"] = 0.5;
  guard(kv.has("memory.family") ? "memory.family" : "memory",
        [&] { w.memory = MemoryLaw::from_params(family, params); });

  w.kernel = kv.get_string("kernel.name", "memory");
  w.ellipticity_floor = kv.get_number("kernel.ellipticity_floor", 1e-3);
  w.validate_kernel = kv.get_bool("kernel.validate", false);
  if (w.engine == EngineKind::kKernel) {
    guard("kernel.name", [&] { (void)make_kernel(w.kernel, w); });
    if (!(w.ellipticity_floor > 0.0) || w.ellipticity_floor > 1.0 / (2.0 * w.dimension)) {
      fail("kernel.ellipticity_floor", "must lie in (0, 1/(2d)]");
    }
  }

  c.replicas = kv.get_integer("replicas", 1);
  if (c.replicas < 1) fail("replicas", "must be >= 1");
  c.master_seed = static_cast<std::uint64_t>(kv.get_integer("master_seed", 0));
  c.outputs = kv.get_string("outputs", "memwalk_out");
  guard("format", [&] { c.format = parse_format(kv.get_string("format", "jsonl")); });

  c.analyze_regen = kv.get_bool("analysis.regen", false);
  c.analyze_clt = kv.get_bool("analysis.clt", false);
  c.analyze_returns = kv.get_bool("analysis.returns", true);
  c.analyze_tail = kv.get_bool("analysis.tail", false);
  c.return_cutoff = kv.get_integer("analysis.return_cutoff", 0);
  if (c.return_cutoff < 0) fail("analysis.return_cutoff", "must be >= 0");
  c.alpha = kv.get_number("analysis.alpha", 0.01);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("analysis.alpha", "must lie in (0, 1)");
  c.clt_min_replicas = kv.get_integer("analysis.clt_min_replicas", 500);
  if (c.clt_min_replicas < 2) fail("analysis.clt_min_replicas", "must be >= 2");
  c.numerics.confirmation = kv.get_number("analysis.confirmation_tolerance", c.numerics.confirmation);
  if (!(c.numerics.confirmation > 0.0 && c.numerics.confirmation < 1.0)) {
    fail("analysis.confirmation_tolerance", "must lie in (0, 1)");
  }
  c.numerics.mass = kv.get_number("numerics.mass_tolerance", c.numerics.mass);
  c.numerics.product = kv.get_number("numerics.product_tolerance", c.numerics.product);

  if (c.analyze_clt && w.checkpoints.empty()) {
    fail(kv.has("analysis.clt") ? "analysis.clt" : "checkpoints", "needs at least one checkpoint");
  }
  if ((c.analyze_regen || c.analyze_tail) && w.engine == EngineKind::kOrrw) {
    fail("analysis.regen", "is undefined for the orrw engine (no memory lengths)");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const auto kv = KeyValueConfig::load(path);
  try {
    return from_kv(kv);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  auto num = [](double x) { return format_double(x); };
  os << "dimension = " << walk.dimension << "\n"
     << "delta = " << num(walk.delta) << "\n"
     << "engine = \"" << to_string(walk.engine) << "\"\n"
     << "horizon = " << walk.horizon << "\n"
     << "record_stride = " << walk.record_stride << "\n"
     << "checkpoints = [";
  for (std::size_t i = 0; i < walk.checkpoints.size(); ++i) os << (i ? ", " : "") << walk.checkpoints[i];
  os << "]\n"
     << "replicas = " << replicas << "\n"
     << "master_seed = " << static_cast<std::int64_t>(master_seed) << "\n"
     << "outputs = \"" << outputs.generic_string() << "\"\n"
     << "format = \"" << to_string(format) << "\"\n"
     << "memory_budget_mb = " << (walk.memory_budget_bytes >> 20) << "\n\n"
     << "[memory]\nfamily = \"" << walk.memory.family_name() << "\"\n";
  switch (walk.memory.family()) {
    case MemoryFamily::kDegenerate: os << "k = " << static_cast<std::int64_t>(walk.memory.param()) << "\n"; break;
    case MemoryFamily::kBernoulli: os << "p1 = " << num(walk.memory.param()) << "\n"; break;
    case MemoryFamily::kGeometric: os << "p = " << num(walk.memory.param()) << "\n"; break;
    case MemoryFamily::kUniform: os << "m = " << static_cast<std::int64_t>(walk.memory.param()) << "\n"; break;
    case MemoryFamily::kPareto: os << "alpha = " << num(walk.memory.param()) << "\n"; break;
  }
  os << "\n[kernel]\nname = \"" << walk.kernel << "\"\n"
     << "ellipticity_floor = " << num(walk.ellipticity_floor) << "\n"
     << "validate = " << (walk.validate_kernel ? "true" : "false") << "\n\n"
     << "[analysis]\nregen = " << (analyze_regen ? "true" : "false") << "\n"
     << "clt = " << (analyze_clt ? "true" : "false") << "\n"
     << "returns = " << (analyze_returns ? "true" : "false") << "\n"
     << "tail = " << (analyze_tail ? "true" : "false") << "\n"
     << "return_cutoff = " << return_cutoff << "\n"
     << "alpha = " << num(alpha) << "\n"
     << "clt_min_replicas = " << clt_min_replicas << "\n"
     << "confirmation_tolerance = " << num(numerics.confirmation) << "\n\n"
     << "[numerics]\nmass_tolerance = " << num(numerics.mass) << "\n"
     << "product_tolerance = " << num(numerics.product) << "\n";
  return os.str();
}

}  // namespace memwalk
