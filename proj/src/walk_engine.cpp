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

#include "memwalk/walk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "memwalk/errors.hpp"

namespace memwalk {

std::string to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::kMemoryWalk: return "memory_walk";
    case EngineKind::kOrrw: return "orrw";
    case EngineKind::kKernel: return "kernel";
  }
  return "?";
}

EngineKind parse_engine(const std::string& name) {
  if (name == "memory_walk") return EngineKind::kMemoryWalk;
  if (name == "orrw") return EngineKind::kOrrw;
  if (name == "kernel") return EngineKind::kKernel;
  throw UsageError("unknown engine '" + name + "' (expected memory_walk, orrw, kernel)");
}

void WalkConfig::validate() const {
  if (dimension < 1 || dimension > kMaxDimension) {
    throw UsageError("dimension must lie in [1, " + std::to_string(kMaxDimension) + "]");
  }
  if (!(delta > 0.0) || !std::isfinite(delta)) throw UsageError("delta must be a positive real");
  if (horizon < 0) throw UsageError("horizon must be >= 0");
  if (record_stride < 0) throw UsageError("record_stride must be >= 0");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 0 || checkpoints[i] > horizon) {
      throw UsageError("checkpoints must lie in [0, horizon]");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw UsageError("checkpoints must be strictly increasing");
    }
  }
  if (engine == EngineKind::kKernel) {
    if (!(ellipticity_floor > 0.0) || ellipticity_floor > 1.0 / (2.0 * dimension)) {
      throw UsageError("ellipticity_floor must lie in (0, 1/(2d)]");
    }
  }
}

// ---------------------------------------------------------------------------
// Edge keys

EdgeKeyPacker::EdgeKeyPacker(int dimension) : dimension_(dimension) {
  if (dimension < 1 || dimension > kMaxDimension) throw UsageError("EdgeKeyPacker: bad dimension");
  bits_ = std::min(60, 124 / dimension);
  limit_ = (std::int64_t{1} << (bits_ - 1)) - 2;
  unit_.resize(dimension);
  for (int a = 0; a < dimension; ++a) unit_[a] = static_cast<unsigned __int128>(1) << (4 + a * bits_);
}

unsigned __int128 EdgeKeyPacker::pack_site(std::span<const std::int64_t> coords) const {
  const std::int64_t bias = std::int64_t{1} << (bits_ - 1);
  unsigned __int128 v = 0;
  for (int a = 0; a < dimension_; ++a) {
    if (coords[a] < -limit_ - 1 || coords[a] > limit_) {
      throw ResourceError("coordinate " + std::to_string(coords[a]) +
                          " exceeds the packed edge-key range for d=" + std::to_string(dimension_));
    }
    v += static_cast<unsigned __int128>(static_cast<std::uint64_t>(coords[a] + bias)) << (4 + a * bits_);
  }
  return v;
}

// ---------------------------------------------------------------------------
// WalkState

WalkState::WalkState(int dimension)
    : position_(Site::origin(dimension)), packer_(dimension), packed_(packer_.pack_site(position_.coords)) {}

void WalkState::reset() {
  std::fill(position_.coords.begin(), position_.coords.end(), 0);
  n_ = returns_ = last_return_ = 0;
  nonzero_ = 0;
  packed_ = packer_.pack_site(position_.coords);
  stamps_.clear();
}

std::optional<std::int64_t> WalkState::last_traversal(const Edge& e) const {
  if (e.base.dimension() != dimension()) throw UsageError("last_traversal: dimension mismatch");
  const std::int64_t lim = packer_.coordinate_limit();
  for (auto c : e.base.coords) {
    if (c < -lim - 1 || c > lim) return std::nullopt;
  }
  if (const auto* s = find_stamp(packer_.key(e))) return *s;
  return std::nullopt;
}

void WalkState::advance(int axis, int sign) {
  const unsigned __int128 unit = packer_.unit(axis);
  const unsigned __int128 base = sign > 0 ? packed_ : packed_ - unit;
  const std::int64_t before = position_[axis];
  const std::int64_t after = before + sign;
  if (after > packer_.coordinate_limit() || after < -packer_.coordinate_limit()) {
    throw ResourceError("walk left the packed edge-key range at step " + std::to_string(n_ + 1));
  }
  ++n_;
  if (tracking_) stamps_.insert_or_assign(EdgeKeyPacker::key(base, axis), n_);
  position_[axis] = after;
  packed_ = sign > 0 ? packed_ + unit : base;
  nonzero_ += (after != 0) - (before != 0);
  if (nonzero_ == 0) {
    ++returns_;
    last_return_ = n_;
  }
}

bool window_contains(const WalkState& state, const Edge& e, std::int64_t k) {
  if (k <= 0) return false;
  const auto stamp = state.last_traversal(e);
  return stamp && *stamp >= state.step_index() - k + 1;
}

namespace {

std::vector<double> indicator_weights(const WalkState& state, std::int64_t threshold, double delta) {
  const Site& x = state.position();
  std::vector<double> w;
  w.reserve(2 * x.dimension());
  for (const Site& y : neighbors(x)) {
    const auto stamp = state.last_traversal(canonical_edge(x, y));
    w.push_back(stamp && *stamp >= threshold ? 1.0 + delta : 1.0);
  }
  return w;
}

}  // namespace

std::vector<double> step_weights_memory(const WalkState& state, std::int64_t k, double delta) {
  if (k <= 0) return std::vector<double>(2 * state.dimension(), 1.0);
  return indicator_weights(state, state.step_index() - k + 1, delta);
}

std::vector<double> step_weights_orrw(const WalkState& state, double delta) {
  return indicator_weights(state, 1, delta);
}

// ---------------------------------------------------------------------------
// Edge sets and symmetries

ExplicitEdgeSet::ExplicitEdgeSet(std::vector<Edge> edges) {
  for (auto& e : edges) insert(e);
}

void ExplicitEdgeSet::insert(const Edge& e) {
  if (!contains(e)) edges_.push_back(e);
}

bool ExplicitEdgeSet::contains(const Edge& e) const {
  return std::find(edges_.begin(), edges_.end(), e) != edges_.end();
}

Site LatticeSymmetry::apply(const Site& centre, const Site& z) const {
  Site out = centre;
  for (int a = 0; a < centre.dimension(); ++a) out[perm[a]] += sign[a] * (z[a] - centre[a]);
  return out;
}

Edge LatticeSymmetry::apply(const Site& centre, const Edge& e) const {
  return canonical_edge(apply(centre, e.base), apply(centre, e.tip()));
}

LatticeSymmetry LatticeSymmetry::inverse() const {
  LatticeSymmetry inv{std::vector<int>(perm.size()), std::vector<int>(sign.size())};
  for (std::size_t a = 0; a < perm.size(); ++a) {
    inv.perm[perm[a]] = static_cast<int>(a);
    inv.sign[perm[a]] = sign[a];
  }
  return inv;
}

std::vector<LatticeSymmetry> lattice_symmetries(int dimension, std::size_t max_count) {
  double order = std::ldexp(1.0, dimension);
  for (int i = 2; i <= dimension; ++i) order *= i;
  std::vector<LatticeSymmetry> out;
  std::vector<int> perm(dimension);
  std::iota(perm.begin(), perm.end(), 0);
  auto signs_of = [dimension](std::uint64_t mask) {
    std::vector<int> s(dimension);
    for (int a = 0; a < dimension; ++a) s[a] = (mask >> a) & 1 ? -1 : 1;
    return s;
  };
  if (order <= static_cast<double>(max_count)) {
    do {
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dimension); ++mask) {
        out.push_back({perm, signs_of(mask)});
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  }
  Rng rng(0x9a77e5);
  out.push_back({perm, signs_of(0)});
  while (out.size() < max_count) {
    std::shuffle(perm.begin(), perm.end(), rng);
    out.push_back({perm, signs_of(rng())});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

class MemoryKernel final : public Kernel {
 public:
  explicit MemoryKernel(double delta) : delta_(delta) {}
  std::string name() const override { return "memory"; }
  double weight(const Site& x, const Site& y, const EdgeSet& window) const override {
    return window.contains(canonical_edge(x, y)) ? 1.0 + delta_ : 1.0;
  }

 private:
  double delta_;
};

class ConstantKernel final : public Kernel {
 public:
  std::string name() const override { return "constant"; }
  double weight(const Site&, const Site&, const EdgeSet&) const override { return 1.0; }
};

struct Registry {
  std::mutex mu;
  std::map<std::string, KernelFactory> factories{
      {"memory", [](const WalkConfig& c) { return std::make_unique<MemoryKernel>(c.delta); }},
      {"constant", [](const WalkConfig&) { return std::make_unique<ConstantKernel>(); }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

Site translate(const Site& s, const Site& t) {
  Site out = s;
  for (int a = 0; a < s.dimension(); ++a) out[a] += t[a];
  return out;
}

bool same_weight(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

}  // namespace

void register_kernel(const std::string& name, KernelFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

std::unique_ptr<Kernel> make_kernel(const std::string& name, const WalkConfig& cfg) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.factories.find(name);
  if (it == r.factories.end()) throw UsageError("unknown kernel '" + name + "'");
  return it->second(cfg);
}

std::vector<std::string> registered_kernels() {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> names;
  for (const auto& [n, f] : r.factories) names.push_back(n);
  return names;
}

void validate_kernel(const Kernel& kernel, int dimension, double ellipticity_floor, int trials,
                     std::uint64_t seed) {
  Rng rng(seed);
  const Site x = Site::origin(dimension);
  const auto ys = neighbors(x);
  const auto syms = lattice_symmetries(dimension);
  auto coord = [&rng](int lo, int hi) {
    return lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  for (int t = 0; t < trials; ++t) {
    ExplicitEdgeSet window;
    const int size = static_cast<int>(coord(0, 2 * dimension + 4));
    for (int i = 0; i < size; ++i) {
      Site base = Site::origin(dimension);
      for (auto& c : base.coords) c = coord(-2, 1);
      window.insert(Edge{base, static_cast<int>(coord(0, dimension - 1))});
    }
    std::vector<double> w;
    double total = 0.0;
    for (const auto& y : ys) {
      w.push_back(kernel.weight(x, y, window));
      total += w.back();
    }
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!(w[i] > 0.0) || w[i] / total < ellipticity_floor) {
        throw KernelError("kernel '" + kernel.name() + "' violates ellipticity floor " +
                          std::to_string(ellipticity_floor) + " towards " + to_string(ys[i]));
      }
    }
    for (const auto& g : syms) {
      ExplicitEdgeSet moved;
      for (const auto& e : window.edges()) moved.insert(g.apply(x, e));
      for (std::size_t i = 0; i < ys.size(); ++i) {
        if (!same_weight(kernel.weight(x, g.apply(x, ys[i]), moved), w[i])) {
          throw KernelError("kernel '" + kernel.name() +
                            "' is not invariant under lattice symmetries (neighbour " +
                            to_string(ys[i]) + ")");
        }
      }
    }
    Site shift = Site::origin(dimension);
    for (auto& c : shift.coords) c = coord(-5, 5);
    ExplicitEdgeSet shifted;
    for (const auto& e : window.edges()) shifted.insert(Edge{translate(e.base, shift), e.axis});
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!same_weight(kernel.weight(translate(x, shift), translate(ys[i], shift), shifted), w[i])) {
        throw KernelError("kernel '" + kernel.name() + "' is not translation invariant");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Walker

Walker::Walker(const WalkConfig& cfg)
    : Walker(cfg, cfg.engine == EngineKind::kKernel ? make_kernel(cfg.kernel, cfg) : nullptr) {}

Walker::Walker(const WalkConfig& cfg, std::unique_ptr<Kernel> kernel)
    : cfg_(cfg), state_(cfg.dimension), kernel_(std::move(kernel)) {
  cfg_.validate();
  if (cfg_.engine == EngineKind::kKernel) {
    if (!kernel_) throw UsageError("kernel engine requires a kernel");
    if (cfg_.validate_kernel) {
      validate_kernel(*kernel_, cfg_.dimension, cfg_.ellipticity_floor);
      symmetries_ = lattice_symmetries(cfg_.dimension);
    }
  }
}

void Walker::reset() {
  state_.reset();
  log_.clear();
}

void Walker::fill_weights(std::int64_t k, double* w) const {
  const int d = cfg_.dimension;
  if (cfg_.engine == EngineKind::kKernel) {
    const Site& x = state_.position();
    const MemoryWindow window(state_, k);
    int i = 0;
    for (const Site& y : neighbors(x)) {
      w[i] = kernel_->weight(x, y, window);
      if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
        throw KernelError("kernel '" + kernel_->name() + "' returned non-positive weight " +
                          std::to_string(w[i]) + " at step " + std::to_string(state_.step_index()));
      }
      ++i;
    }
    return;
  }
  std::int64_t threshold = 1;
  if (cfg_.engine == EngineKind::kMemoryWalk) {
    if (k <= 0 || state_.step_index() == 0) {
      std::fill(w, w + 2 * d, 1.0);
      return;
    }
    threshold = state_.step_index() - k + 1;
  }
  const double reinforced = 1.0 + cfg_.delta;
  const auto& packer = state_.packer();
  const unsigned __int128 p = state_.packed_position();
  for (int a = 0; a < d; ++a) {
    const std::int64_t* minus = state_.find_stamp(EdgeKeyPacker::key(p - packer.unit(a), a));
    const std::int64_t* plus = state_.find_stamp(EdgeKeyPacker::key(p, a));
    w[2 * a] = minus && *minus >= threshold ? reinforced : 1.0;
    w[2 * a + 1] = plus && *plus >= threshold ? reinforced : 1.0;
  }
}

void Walker::check_kernel_step(std::int64_t k, const double* w, double total) const {
  const Site& x = state_.position();
  const auto ys = neighbors(x);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (w[i] / total < cfg_.ellipticity_floor) {
      std::ostringstream os;
      os << "kernel '" << kernel_->name() << "' violates ellipticity at step " << state_.step_index()
         << ": P(" << to_string(x) << " -> " << to_string(ys[i]) << ") = " << w[i] / total << " < "
         << cfg_.ellipticity_floor;
      throw KernelError(os.str());
    }
  }
  const MemoryWindow window(state_, k);
  for (const auto& g : symmetries_) {
    const TransformedEdgeSet moved(window, x, g);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!same_weight(kernel_->weight(x, g.apply(x, ys[i]), moved), w[i])) {
        throw KernelError("kernel '" + kernel_->name() + "' is not symmetric at step " +
                          std::to_string(state_.step_index()) + " around " + to_string(x));
      }
    }
  }
}

std::vector<double> Walker::transition_probabilities(std::int64_t k) const {
  std::vector<double> w(2 * cfg_.dimension);
  fill_weights(k, w.data());
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& v : w) v /= total;
  return w;
}

void Walker::step(std::int64_t k, Rng& rng) {
  double w[2 * kMaxDimension];
  const int m = 2 * cfg_.dimension;
  if (k > 0 && !state_.edge_tracking() && cfg_.engine != EngineKind::kOrrw) {
    throw UsageError("step: memory length " + std::to_string(k) + " with edge tracking off");
  }
  int chosen = m - 1;
  if (cfg_.engine == EngineKind::kMemoryWalk && (k <= 0 || state_.step_index() == 0)) {
    // unit weights: the cumulative search below reduces to floor(u * m)
    chosen = std::min(static_cast<int>(uniform01(rng) * m), m - 1);
  } else {
    fill_weights(k, w);
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += w[i];
    if (cfg_.engine == EngineKind::kKernel && cfg_.validate_kernel) check_kernel_step(k, w, total);

    const double u = uniform01(rng) * total;
    double cum = 0.0;
    for (int i = 0; i < m - 1; ++i) {
      cum += w[i];
      if (u < cum) {
        chosen = i;
        break;
      }
    }
  }
  const int axis = chosen / 2;
  const int sign = chosen % 2 ? 1 : -1;
  if (cfg_.keep_step_log) {
    log_.push_back({k, static_cast<std::int8_t>(axis), static_cast<std::int8_t>(sign)});
  }
  state_.advance(axis, sign);
}

void Walker::step(const MemoryLaw& law, Rng& rng) {
  const std::int64_t k = cfg_.engine == EngineKind::kOrrw ? 0 : law.sample(rng);
  step(k, rng);
}

// ---------------------------------------------------------------------------
// run

std::uint64_t estimate_run_bytes(const WalkConfig& cfg) {
  const auto h = static_cast<std::uint64_t>(std::max<std::int64_t>(cfg.horizon, 0));
  const std::uint64_t site = sizeof(Site) + sizeof(std::int64_t) * cfg.dimension;
  std::uint64_t bytes = site * (cfg.checkpoints.size() + 1);
  if (cfg.record_stride > 0) bytes += site * (h / static_cast<std::uint64_t>(cfg.record_stride) + 1);
  if (cfg.keep_k_sequence) bytes += sizeof(std::int64_t) * h;
  if (cfg.keep_step_log) bytes += sizeof(StepRecord) * h;
  return bytes;
}

RunResult run(const WalkConfig& cfg) {
  auto streams = ReplicaStreams::derive(cfg.seed, 0);
  return run(cfg, streams);
}

RunResult run(const WalkConfig& cfg, ReplicaStreams& streams, const RunOptions& options) {
  cfg.validate();
  if (const auto need = estimate_run_bytes(cfg); need > cfg.memory_budget_bytes) {
    throw ResourceError("run needs ~" + std::to_string(need >> 20) + " MiB of buffers, budget is " +
                        std::to_string(cfg.memory_budget_bytes >> 20) +
                        " MiB; raise record_stride or drop the K-sequence/step log");
  }
  const bool draws_k = cfg.engine != EngineKind::kOrrw;
  // a one-point law needs no draws
  const std::optional<std::int64_t> fixed_k =
      cfg.memory.family() == MemoryFamily::kDegenerate ? cfg.memory.support_max() : std::nullopt;
  if (!options.k_sequence.empty() && draws_k &&
      options.k_sequence.size() < static_cast<std::size_t>(cfg.horizon)) {
    throw UsageError("run: pre-drawn K-sequence shorter than the horizon");
  }
  if (!std::is_sorted(options.record_at.begin(), options.record_at.end())) {
    throw UsageError("run: record_at must be sorted");
  }

  Walker walker(cfg);
  if (cfg.engine == EngineKind::kMemoryWalk) {
    const bool never_remembers =
        options.k_sequence.empty()
            ? cfg.memory.support_max() == std::optional<std::int64_t>(0)
            : std::all_of(options.k_sequence.begin(), options.k_sequence.begin() + cfg.horizon,
                          [](std::int64_t k) { return k == 0; });
    walker.set_edge_tracking(!never_remembers);
  }
  RunSummary summary;
  summary.horizon = cfg.horizon;
  if (cfg.keep_k_sequence && draws_k) summary.k_sequence.reserve(cfg.horizon);
  auto next_cp = cfg.checkpoints.begin();
  auto next_rec = options.record_at.begin();
  auto record = [&](std::int64_t n) {
    const Site& x = walker.state().position();
    if (next_cp != cfg.checkpoints.end() && *next_cp == n) {
      summary.checkpoints.emplace_back(n, x);
      ++next_cp;
    }
    while (next_rec != options.record_at.end() && *next_rec == n) {
      summary.recorded.push_back(x);
      ++next_rec;
    }
    if (cfg.record_stride > 0 && n % cfg.record_stride == 0) summary.history.push_back(x);
  };

  record(0);
  for (std::int64_t n = 0; n < cfg.horizon; ++n) {
    std::int64_t k = 0;
    if (draws_k) {
      if (!options.k_sequence.empty()) {
        k = options.k_sequence[n];
      } else {
        k = fixed_k ? *fixed_k : cfg.memory.sample(streams.memory);
      }
      if (cfg.keep_k_sequence) summary.k_sequence.push_back(k);
    }
    walker.step(k, streams.steps);
    record(n + 1);
  }
  if (next_rec != options.record_at.end()) throw UsageError("run: record_at index beyond horizon");

  const WalkState& s = walker.state();
  summary.final_position = s.position();
  summary.returns = s.origin_returns();
  summary.last_return = s.last_return();
  summary.distinct_edges = s.distinct_edges();
  RunResult result{std::move(walker).take_state(), {}, std::move(summary)};
  result.step_log = std::move(walker).take_step_log();
  return result;
}

}  // namespace memwalk
