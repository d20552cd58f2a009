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

#pragma once

#include <absl/container/flat_hash_map.h>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memwalk/lattice.hpp"
#include "memwalk/memory_law.hpp"
#include "memwalk/rng.hpp"

namespace memwalk {

enum class EngineKind { kMemoryWalk, kOrrw, kKernel };

std::string to_string(EngineKind kind);
EngineKind parse_engine(const std::string& name);

/// Largest supported lattice dimension.
inline constexpr int kMaxDimension = 16;

struct WalkConfig {
  int dimension = 3;
  double delta = 1.0;
  MemoryLaw memory = MemoryLaw::geometric(0.5);
  EngineKind engine = EngineKind::kMemoryWalk;
  std::int64_t horizon = 1;
  std::uint64_t seed = 0;
  std::int64_t record_stride = 0;  // 0 = summary only

  std::vector<std::int64_t> checkpoints;  // strictly increasing, <= horizon
  bool keep_k_sequence = false;
  bool keep_step_log = false;

  // kernel engine
  std::string kernel = "memory";
  double ellipticity_floor = 1e-3;
  bool validate_kernel = false;

  std::uint64_t memory_budget_bytes = std::uint64_t{4} << 30;

  /// Throws UsageError naming the offending field.
  void validate() const;
};

/// Packed (base, axis) edge identity used as hash key.
struct EdgeKey {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;

  bool operator==(const EdgeKey&) const = default;
  template <typename H>
  friend H AbslHashValue(H h, const EdgeKey& k) {
    return H::combine(std::move(h), k.lo, k.hi);
  }
};

/// Maps lattice edges to 128-bit keys. Coordinate a of the base occupies
/// `bits` bits at offset 4 + a*bits, the axis the low 4 bits, so moving
/// along an axis is a single add on the packed site.
class EdgeKeyPacker {
 public:
  explicit EdgeKeyPacker(int dimension);

  int bits() const noexcept { return bits_; }
  /// Largest |coordinate| a site may reach.
  std::int64_t coordinate_limit() const noexcept { return limit_; }

  unsigned __int128 pack_site(std::span<const std::int64_t> coords) const;
  unsigned __int128 unit(int axis) const noexcept { return unit_[axis]; }
  static EdgeKey key(unsigned __int128 packed_base, int axis) noexcept {
    const unsigned __int128 v = packed_base | static_cast<unsigned __int128>(axis);
    return EdgeKey{static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(v >> 64)};
  }
  EdgeKey key(const Edge& e) const { return key(pack_site(e.base.coords), e.axis); }

 private:
  int dimension_;
  int bits_;
  std::int64_t limit_;
  std::vector<unsigned __int128> unit_;
};

/// Position, step index and the last-crossing time of every crossed edge.
/// The key set of the last-traversal map is the range E_n.
class WalkState {
 public:
  explicit WalkState(int dimension);

  int dimension() const noexcept { return position_.dimension(); }
  const Site& position() const noexcept { return position_; }
  std::int64_t step_index() const noexcept { return n_; }
  std::int64_t origin_returns() const noexcept { return returns_; }
  std::int64_t last_return() const noexcept { return last_return_; }
  bool at_origin() const noexcept { return nonzero_ == 0; }

  std::optional<std::int64_t> last_traversal(const Edge& e) const;
  std::size_t distinct_edges() const noexcept { return stamps_.size(); }

  /// Moves one unit along \p axis in direction \p sign (+1/-1) and stamps the
  /// crossed edge with the new step index.
  void advance(int axis, int sign);
  void reset();

  /// With tracking off, advance() keeps no stamps; only valid while every
  /// memory length is 0.
  void set_edge_tracking(bool on) noexcept { tracking_ = on; }
  bool edge_tracking() const noexcept { return tracking_; }

  const EdgeKeyPacker& packer() const noexcept { return packer_; }
  unsigned __int128 packed_position() const noexcept { return packed_; }
  const std::int64_t* find_stamp(const EdgeKey& key) const {
    auto it = stamps_.find(key);
    return it == stamps_.end() ? nullptr : &it->second;
  }

 private:
  Site position_;
  std::int64_t n_ = 0;
  std::int64_t returns_ = 0;
  std::int64_t last_return_ = 0;
  int nonzero_ = 0;
  EdgeKeyPacker packer_;
  unsigned __int128 packed_;
  bool tracking_ = true;
  absl::flat_hash_map<EdgeKey, std::int64_t> stamps_;
};

/// e in R_{n,k}: the last crossing of e happened at a step in [n-k+1, n].
/// R_{n,0} is empty; k > n means the whole range.
bool window_contains(const WalkState& state, const Edge& e, std::int64_t k);

std::vector<double> step_weights_memory(const WalkState& state, std::int64_t k, double delta);
std::vector<double> step_weights_orrw(const WalkState& state, double delta);

/// Read-only view of a finite edge set handed to kernels.
class EdgeSet {
 public:
  virtual ~EdgeSet() = default;
  virtual bool contains(const Edge& e) const = 0;
};

/// The memory window R_{n,k} of a live walk.
class MemoryWindow final : public EdgeSet {
 public:
  MemoryWindow(const WalkState& state, std::int64_t k) : state_(state), k_(k) {}
  bool contains(const Edge& e) const override { return window_contains(state_, e, k_); }

 private:
  const WalkState& state_;
  std::int64_t k_;
};

/// Explicit small edge set.
class ExplicitEdgeSet final : public EdgeSet {
 public:
  ExplicitEdgeSet() = default;
  explicit ExplicitEdgeSet(std::vector<Edge> edges);
  void insert(const Edge& e);
  bool contains(const Edge& e) const override;
  const std::vector<Edge>& edges() const noexcept { return edges_; }

 private:
  std::vector<Edge> edges_;
};

/// Signed axis permutation about a centre site: (g v)[perm[a]] = sign[a] * v[a]
/// for displacements v from the centre.
struct LatticeSymmetry {
  std::vector<int> perm;
  std::vector<int> sign;

  Site apply(const Site& centre, const Site& z) const;
  Edge apply(const Site& centre, const Edge& e) const;
  LatticeSymmetry inverse() const;
};

/// All 2^d d! symmetries fixing a site, or a deterministic sample of
/// \p max_count of them when the group is larger.
std::vector<LatticeSymmetry> lattice_symmetries(int dimension, std::size_t max_count = 384);

/// g(W) for an edge set W.
class TransformedEdgeSet final : public EdgeSet {
 public:
  TransformedEdgeSet(const EdgeSet& base, const Site& centre, const LatticeSymmetry& g)
      : base_(base), centre_(centre), inverse_(g.inverse()) {}
  bool contains(const Edge& e) const override { return base_.contains(inverse_.apply(centre_, e)); }

 private:
  const EdgeSet& base_;
  const Site& centre_;
  LatticeSymmetry inverse_;
};

/// Generalized jump kernel: positive weight for moving from x to neighbour y
/// given the current memory window. The engine normalizes over the 2d
/// neighbours.
class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual std::string name() const = 0;
  virtual double weight(const Site& x, const Site& y, const EdgeSet& window) const = 0;
};

using KernelFactory = std::function<std::unique_ptr<Kernel>(const WalkConfig&)>;

/// Registers a kernel under \p name; later registrations replace earlier ones.
/// "memory" (1 + delta * 1{edge in window}) and "constant" are built in.
void register_kernel(const std::string& name, KernelFactory factory);
std::unique_ptr<Kernel> make_kernel(const std::string& name, const WalkConfig& cfg);
std::vector<std::string> registered_kernels();

/// Checks ellipticity and symmetry invariance on \p trials random small
/// windows around the origin. Throws KernelError with a diagnostic.
void validate_kernel(const Kernel& kernel, int dimension, double ellipticity_floor,
                     int trials = 64, std::uint64_t seed = 0x5eed);

struct StepRecord {
  std::int64_t k = 0;
  std::int8_t axis = 0;
  std::int8_t sign = 0;
};

/// One-walk simulator for any of the three engines.
class Walker {
 public:
  explicit Walker(const WalkConfig& cfg);
  Walker(const WalkConfig& cfg, std::unique_ptr<Kernel> kernel);

  const WalkState& state() const noexcept { return state_; }
  const WalkConfig& config() const noexcept { return cfg_; }
  const std::vector<StepRecord>& step_log() const noexcept { return log_; }
  void reset();
  /// See WalkState::set_edge_tracking; step() then rejects k > 0.
  void set_edge_tracking(bool on) noexcept { state_.set_edge_tracking(on); }

  WalkState take_state() && { return std::move(state_); }
  std::vector<StepRecord> take_step_log() && { return std::move(log_); }

  /// One step using memory length \p k (ignored by the ORRW engine).
  void step(std::int64_t k, Rng& rng);
  /// Draws K_n from \p law on \p rng (except for ORRW), then steps with the same rng.
  void step(const MemoryLaw& law, Rng& rng);

  /// Normalized transition probabilities over neighbours() order for memory length k.
  std::vector<double> transition_probabilities(std::int64_t k) const;

 private:
  void fill_weights(std::int64_t k, double* w) const;
  void check_kernel_step(std::int64_t k, const double* w, double total) const;

  WalkConfig cfg_;
  WalkState state_;
  std::unique_ptr<Kernel> kernel_;
  std::vector<LatticeSymmetry> symmetries_;
  std::vector<StepRecord> log_;
};

struct RunOptions {
  /// Pre-drawn K_0..K_{horizon-1}; drawn from the memory stream when empty.
  std::span<const std::int64_t> k_sequence;
  /// Sorted step indices at which to record X_n, in addition to checkpoints.
  std::span<const std::int64_t> record_at;
};

struct RunSummary {
  Site final_position;
  std::int64_t horizon = 0;
  std::int64_t returns = 0;      // #{1 <= n <= horizon : X_n = 0}
  std::int64_t last_return = 0;  // largest such n, 0 when none
  std::size_t distinct_edges = 0;  // 0 when edge tracking was off (K = 0 throughout)
  std::vector<std::pair<std::int64_t, Site>> checkpoints;
  std::vector<Site> history;  // X_0, X_stride, X_2stride, ...
  std::vector<Site> recorded;  // one per RunOptions::record_at entry
  std::vector<std::int64_t> k_sequence;  // when keep_k_sequence
};

struct RunResult {
  WalkState state;
  std::vector<StepRecord> step_log;
  RunSummary summary;
};

/// Runs \p cfg.horizon steps from the origin with empty memory, using the
/// streams of replica 0 of \p cfg.seed.
RunResult run(const WalkConfig& cfg);
RunResult run(const WalkConfig& cfg, ReplicaStreams& streams, const RunOptions& options = {});

/// Bytes of explicitly requested buffers; run() refuses to start above the budget.
std::uint64_t estimate_run_bytes(const WalkConfig& cfg);

}  // namespace memwalk
