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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memwalk/lattice.hpp"
#include "memwalk/regeneration.hpp"

namespace memwalk {

/// What one replica contributes to the pooled statistics.
struct ReplicaRecord {
  std::int64_t replica = 0;
  Site final_position;
  std::int64_t returns = 0;
  std::int64_t last_return = 0;
  std::vector<std::pair<std::int64_t, Site>> checkpoints;
  RegenerationReport regen;
  std::string k_digest;
};

struct Ensemble {
  int dimension = 0;
  std::int64_t horizon = 0;
  std::vector<std::int64_t> checkpoints;
  std::vector<ReplicaRecord> replicas;
};

/// Coordinates of every replica at one step index, one column per axis.
struct PositionColumns {
  std::int64_t n = 0;
  std::vector<std::vector<std::int64_t>> axes;

  std::size_t replicas() const { return axes.empty() ? 0 : axes.front().size(); }
};

/// Throws UsageError when a replica did not record step \p n.
PositionColumns positions_at(const Ensemble& ensemble, std::int64_t n);

struct MsdPoint {
  std::int64_t n = 0;
  double mean = 0.0;  // mean |X_n|^2
  double se = 0.0;
};

MsdPoint msd_at(const PositionColumns& columns);
/// Throws UsageError on an empty ensemble.
std::vector<MsdPoint> msd_curve(const Ensemble& ensemble, std::span<const std::int64_t> checkpoints);

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double relative_residual = 0.0;  // ||y - fit|| / ||y||
};

/// Ordinary least squares of MSD against n over points with n in [lo, hi].
LinearFit fit_msd_linear(std::span<const MsdPoint> curve, std::int64_t lo, std::int64_t hi);

struct ReturnStats {
  std::int64_t replicas = 0;
  std::int64_t cutoff = 0;
  double mean_returns = 0.0;
  double se_returns = 0.0;
  double fraction_after_cutoff = 0.0;  // replicas whose last return is > cutoff
};

ReturnStats return_statistics(const Ensemble& ensemble, std::int64_t cutoff);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov limit survival function Q(lambda) = P[K > lambda].
double kolmogorov_survival(double lambda);
/// Two-sample KS; exact lattice-path p-value when min(n, m) < 30, else the
/// asymptotic law with the Stephens correction. Throws UsageError on empty input.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
/// One-sample KS against \p cdf (asymptotic p-value).
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

double normal_cdf(double x);

/// Upper-tail chi-square p-value.
double chi_square_sf(double statistic, double dof);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Goodness of fit of \p observed counts against cell probabilities
/// \p expected; the remaining mass 1 - sum(expected) is pooled with the
/// remaining count total - sum(observed) into one overflow cell.
ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed, std::span<const double> expected,
                               std::int64_t total);

struct HillResult {
  double estimate = 0.0;
  double se = 0.0;
  std::int64_t k = 0;
  bool heavy_tail = true;  // false when the estimate exceeds 10
};

/// Hill estimator over the ceil(fraction * n) largest order statistics.
/// Requires positive values and fraction in (0, 0.5]; DomainError when the
/// top order statistics are all equal.
HillResult hill_tail_index(std::span<const double> sample, double fraction);

struct TestResult {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;  // NaN for SE-window checks
  std::string threshold;
  bool passed = false;
};

struct CltReport {
  std::int64_t n = 0;
  std::int64_t replicas = 0;
  double sigma_hat = 0.0;  // pooled over axes
  double sigma_se = 0.0;
  std::vector<double> axis_sigma;
  std::vector<KsResult> axis_ks;
  std::vector<std::vector<double>> covariance;  // of X_n / sqrt(n)
  std::vector<std::vector<double>> covariance_se;
  bool normality = false;
  bool isotropy = false;
  bool nondegenerate = false;
  std::string diagnostic;
  std::vector<TestResult> tests;

  bool passed() const { return normality && isotropy && nondegenerate; }
};

/// Marginal normality, isotropy and non-degeneracy of X_n / sqrt(n).
/// Throws UsageError below \p min_replicas.
CltReport clt_tests(const PositionColumns& columns, double alpha = 0.01, std::int64_t min_replicas = 500);
CltReport clt_tests(const Ensemble& ensemble, std::int64_t n, double alpha = 0.01,
                    std::int64_t min_replicas = 500);

struct RegenStats {
  std::int64_t increments = 0;
  double mean_dt = 0.0;
  double se_dt = 0.0;
  KsResult halves;  // first vs second half of each replica's increments, pooled
  std::vector<double> dy_mean;
  std::vector<double> dy_se;
  bool dy_centered = false;  // every axis within 3 SE of 0
  std::vector<TestResult> tests;
};

RegenStats regeneration_statistics(const Ensemble& ensemble, double alpha = 0.01);

struct AnalysisOptions {
  bool regen = false;
  bool clt = false;
  bool returns = true;
  bool tail = false;
  std::int64_t return_cutoff = 0;
  double alpha = 0.01;
  double tail_fraction = 0.01;
  std::int64_t clt_min_replicas = 500;
};

/// Pooled results folded over replicas in index order.
struct PooledSummary {
  std::vector<MsdPoint> msd;
  std::optional<ReturnStats> returns;
  std::optional<CltReport> clt;
  std::optional<RegenStats> regen;
  std::optional<HillResult> tail;
  std::vector<TestResult> tests;
};

PooledSummary summarize(const Ensemble& ensemble, const AnalysisOptions& options);

}  // namespace memwalk
