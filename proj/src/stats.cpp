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

#include "memwalk/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "memwalk/errors.hpp"
#include "memwalk/simd/kernels.hpp"

namespace memwalk {

namespace {

using simd::Int128;

double ratio(Int128 num, Int128 den) { return static_cast<double>(num) / static_cast<double>(den); }

// Unbiased mean and SE of a column of integers from exact integer sums.
std::pair<double, double> mean_se(std::span<const std::int64_t> v) {
  const auto r = static_cast<Int128>(v.size());
  const Int128 s = simd::sum(v);
  const double mean = ratio(s, r);
  if (r < 2) return {mean, 0.0};
  const Int128 ss = simd::dot(v, v);
  const double var = ratio(r * ss - s * s, r * (r - 1));
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(r))};
}

// Sums run over a sorted copy so the result does not depend on input order.
std::pair<double, double> mean_se(std::span<const double> in) {
  std::vector<double> v(in.begin(), in.end());
  std::sort(v.begin(), v.end());
  const auto r = static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += x;
  const double mean = s / r;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (r - 1.0) / r)};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

PositionColumns positions_at(const Ensemble& ensemble, std::int64_t n) {
  PositionColumns cols;
  cols.n = n;
  cols.axes.assign(ensemble.dimension, {});
  for (auto& axis : cols.axes) axis.reserve(ensemble.replicas.size());
  for (const auto& rep : ensemble.replicas) {
    const Site* x = nullptr;
    if (n == ensemble.horizon) x = &rep.final_position;
    for (const auto& [m, site] : rep.checkpoints) {
      if (m == n) x = &site;
    }
    if (!x) {
      throw UsageError("replica " + std::to_string(rep.replica) + " has no position recorded at step " +
                       std::to_string(n));
    }
    for (int a = 0; a < ensemble.dimension; ++a) cols.axes[a].push_back((*x)[a]);
  }
  return cols;
}

MsdPoint msd_at(const PositionColumns& columns) {
  if (columns.replicas() == 0) throw UsageError("msd: empty ensemble");
  std::vector<std::int64_t> sq(columns.replicas(), 0);
  for (const auto& axis : columns.axes) simd::accumulate_squares(axis, sq);
  const auto [mean, se] = mean_se(std::span<const std::int64_t>(sq));
  return {columns.n, mean, se};
}

std::vector<MsdPoint> msd_curve(const Ensemble& ensemble, std::span<const std::int64_t> checkpoints) {
  if (ensemble.replicas.empty()) throw UsageError("msd_curve: empty ensemble");
  std::vector<MsdPoint> out;
  for (auto n : checkpoints) {
    if (n == 0) {
      out.push_back({0, 0.0, 0.0});
      continue;
    }
    out.push_back(msd_at(positions_at(ensemble, n)));
  }
  return out;
}

LinearFit fit_msd_linear(std::span<const MsdPoint> curve, std::int64_t lo, std::int64_t hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  double m = 0;
  for (const auto& p : curve) {
    if (p.n < lo || p.n > hi) continue;
    const double x = static_cast<double>(p.n);
    sx += x;
    sy += p.mean;
    sxx += x * x;
    sxy += x * p.mean;
    syy += p.mean * p.mean;
    m += 1;
  }
  if (m < 2) throw UsageError("fit_msd_linear: need at least two points in range");
  LinearFit fit;
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0;
  for (const auto& p : curve) {
    if (p.n < lo || p.n > hi) continue;
    const double r = p.mean - (fit.intercept + fit.slope * static_cast<double>(p.n));
    rss += r * r;
  }
  fit.relative_residual = std::sqrt(rss / syy);
  return fit;
}

ReturnStats return_statistics(const Ensemble& ensemble, std::int64_t cutoff) {
  ReturnStats rs;
  rs.cutoff = cutoff;
  rs.replicas = static_cast<std::int64_t>(ensemble.replicas.size());
  if (rs.replicas == 0) return rs;
  std::vector<std::int64_t> counts;
  std::int64_t late = 0;
  for (const auto& rep : ensemble.replicas) {
    counts.push_back(rep.returns);
    late += rep.last_return > cutoff;
  }
  std::tie(rs.mean_returns, rs.se_returns) = mean_se(std::span<const std::int64_t>(counts));
  rs.fraction_after_cutoff = static_cast<double>(late) / static_cast<double>(rs.replicas);
  return rs;
}

// ---------------------------------------------------------------------------
// Tests

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    const double l2 = lambda * lambda;
    double s = 0.0;
    for (int j = 1; j <= 20; ++j) {
      const double t = (2.0 * j - 1.0) * pi;
      s += std::exp(-t * t / (8.0 * l2));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

// P[D < d] for two samples of sizes m, n without ties (lattice-path count).
double smirnov_cdf_exact(double d, std::int64_t m, std::int64_t n) {
  if (m > n) std::swap(m, n);
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double q = (0.5 + std::floor(d * md * nd - 1e-7)) / (md * nd);
  std::vector<double> u(n + 1);
  for (std::int64_t j = 0; j <= n; ++j) u[j] = (static_cast<double>(j) / nd > q) ? 0.0 : 1.0;
  for (std::int64_t i = 1; i <= m; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(i + n);
    u[0] = (static_cast<double>(i) / md > q) ? 0.0 : w * u[0];
    for (std::int64_t j = 1; j <= n; ++j) {
      u[j] = std::abs(static_cast<double>(i) / md - static_cast<double>(j) / nd) > q ? 0.0 : w * u[j] + u[j - 1];
    }
  }
  return u[n];
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw UsageError("ks_two_sample: both samples must be nonempty");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto n = static_cast<double>(x.size());
  const auto m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult r{d, 1.0};
  if (d == 0.0) return r;
  if (std::min(x.size(), y.size()) < 30) {
    r.p_value = std::clamp(1.0 - smirnov_cdf_exact(d, static_cast<std::int64_t>(x.size()),
                                                   static_cast<std::int64_t>(y.size())),
                           0.0, 1.0);
  } else {
    const double ne = std::sqrt(n * m / (n + m));
    r.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
  }
  return r;
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw UsageError("ks_one_sample: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(j) / n - f)});
    i = j;
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)};
}

double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed, std::span<const double> expected,
                               std::int64_t total) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw UsageError("chi_square_gof: observed and expected must have equal nonzero length");
  }
  const double t = static_cast<double>(total);
  double stat = 0.0, mass = 0.0;
  std::int64_t seen = 0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected[i] * t;
    if (e <= 0.0) throw UsageError("chi_square_gof: expected count must be positive");
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    mass += expected[i];
    seen += observed[i];
    ++cells;
  }
  const double rest = (1.0 - mass) * t;
  if (rest > 1e-9 * t) {
    const double o = static_cast<double>(total - seen);
    stat += (o - rest) * (o - rest) / rest;
    ++cells;
  }
  ChiSquareResult r{stat, static_cast<double>(cells - 1), 1.0};
  r.p_value = chi_square_sf(stat, r.dof);
  return r;
}

HillResult hill_tail_index(std::span<const double> sample, double fraction) {
  if (!(fraction > 0.0 && fraction <= 0.5)) throw UsageError("hill_tail_index: fraction must lie in (0, 0.5]");
  if (sample.size() < 2) throw UsageError("hill_tail_index: need at least two values");
  std::vector<double> x(sample.begin(), sample.end());
  for (double v : x) {
    if (!(v > 0.0)) throw UsageError("hill_tail_index: values must be positive");
  }
  const auto n = static_cast<std::int64_t>(x.size());
  const auto k = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(fraction * static_cast<double>(n))), 1, n - 1);
  std::nth_element(x.begin(), x.begin() + k, x.end(), std::greater<>());
  const double threshold = x[k];
  double s = 0.0;
  for (std::int64_t i = 0; i < k; ++i) s += std::log(x[i] / threshold);
  if (s <= 0.0) throw DomainError("hill_tail_index: top order statistics are all equal");
  HillResult h;
  h.k = k;
  h.estimate = static_cast<double>(k) / s;
  h.se = h.estimate / std::sqrt(static_cast<double>(k));
  h.heavy_tail = h.estimate <= 10.0;
  return h;
}

// ---------------------------------------------------------------------------
// CLT

CltReport clt_tests(const PositionColumns& columns, double alpha, std::int64_t min_replicas) {
  const auto r = static_cast<std::int64_t>(columns.replicas());
  if (r < min_replicas) {
    throw UsageError("clt_tests: " + std::to_string(r) + " replicas, need at least " +
                     std::to_string(min_replicas));
  }
  if (columns.n <= 0) throw UsageError("clt_tests: step index must be positive");
  const int d = static_cast<int>(columns.axes.size());
  const double scale = 1.0 / static_cast<double>(columns.n);  // for second moments of X/sqrt(n)
  const auto rr = static_cast<Int128>(r);

  CltReport rep;
  rep.n = columns.n;
  rep.replicas = r;
  rep.covariance.assign(d, std::vector<double>(d));
  rep.covariance_se.assign(d, std::vector<double>(d));

  std::vector<Int128> sums(d);
  std::vector<double> means(d);
  for (int a = 0; a < d; ++a) {
    sums[a] = simd::sum(columns.axes[a]);
    means[a] = ratio(sums[a], rr);
  }
  // centred products per replica, for the SE of each covariance entry
  auto product_se = [&](int a, int b) {
    std::vector<double> p(r);
    for (std::int64_t i = 0; i < r; ++i) {
      p[i] = (static_cast<double>(columns.axes[a][i]) - means[a]) *
             (static_cast<double>(columns.axes[b][i]) - means[b]) * scale;
    }
    return mean_se(std::span<const double>(p)).second;
  };
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      const Int128 sab = simd::dot(columns.axes[a], columns.axes[b]);
      const double cov = ratio(rr * sab - sums[a] * sums[b], rr * (rr - 1)) * scale;
      rep.covariance[a][b] = rep.covariance[b][a] = cov;
      rep.covariance_se[a][b] = rep.covariance_se[b][a] = product_se(a, b);
    }
  }

  double var_sum = 0.0;
  for (int a = 0; a < d; ++a) {
    rep.axis_sigma.push_back(std::sqrt(std::max(rep.covariance[a][a], 0.0)));
    var_sum += rep.covariance[a][a];
  }
  const double pooled_var = var_sum / d;
  rep.sigma_hat = std::sqrt(std::max(pooled_var, 0.0));
  {
    // SE of the pooled variance from per-replica mean squared radius
    std::vector<double> q(r);
    for (std::int64_t i = 0; i < r; ++i) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const double c = static_cast<double>(columns.axes[a][i]) - means[a];
        s += c * c;
      }
      q[i] = s * scale / d;
    }
    const double var_se = mean_se(std::span<const double>(q)).second;
    rep.sigma_se = rep.sigma_hat > 0.0 ? var_se / (2.0 * rep.sigma_hat) : 0.0;
  }

  rep.nondegenerate = rep.sigma_hat > 0.0 && rep.sigma_hat - 3.0 * rep.sigma_se > 0.0;
  rep.tests.push_back({"clt.nondegenerate", rep.sigma_hat, std::nan(""), "sigma_hat - 3 SE > 0",
                       rep.nondegenerate});
  if (!rep.nondegenerate) {
    rep.diagnostic = rep.sigma_hat == 0.0 ? "zero variance: all replicas share the same X_n"
                                          : "sigma_hat not separated from 0 by 3 SE";
  }

  rep.normality = rep.nondegenerate;
  const double sd = rep.sigma_hat * std::sqrt(static_cast<double>(columns.n));
  for (int a = 0; a < d; ++a) {
    KsResult ks{1.0, 0.0};
    if (sd > 0.0) {
      std::vector<double> z(r);
      for (std::int64_t i = 0; i < r; ++i) z[i] = static_cast<double>(columns.axes[a][i]) / sd;
      ks = ks_one_sample(z, normal_cdf);
    }
    rep.axis_ks.push_back(ks);
    const bool ok = ks.p_value > alpha;
    rep.normality = rep.normality && ok;
    rep.tests.push_back({"clt.ks_axis" + std::to_string(a), ks.statistic, ks.p_value, "p > " + fmt(alpha), ok});
  }

  rep.isotropy = true;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      const double c = rep.covariance[a][b];
      const double se = rep.covariance_se[a][b];
      const bool ok = std::abs(c) <= 3.0 * se;
      rep.isotropy = rep.isotropy && ok;
      rep.tests.push_back({"clt.offdiag_" + std::to_string(a) + std::to_string(b), c / (se > 0 ? se : 1.0),
                           std::nan(""), "|cov| <= 3 SE", ok});
    }
  }
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      std::vector<double> diff(r);
      for (std::int64_t i = 0; i < r; ++i) {
        const double ca = static_cast<double>(columns.axes[a][i]) - means[a];
        const double cb = static_cast<double>(columns.axes[b][i]) - means[b];
        diff[i] = (ca * ca - cb * cb) * scale;
      }
      const double se = mean_se(std::span<const double>(diff)).second;
      const double gap = rep.covariance[a][a] - rep.covariance[b][b];
      const bool ok = std::abs(gap) <= 3.0 * se;
      rep.isotropy = rep.isotropy && ok;
      rep.tests.push_back({"clt.diag_" + std::to_string(a) + std::to_string(b), gap / (se > 0 ? se : 1.0),
                           std::nan(""), "|var_a - var_b| <= 3 SE", ok});
    }
  }
  return rep;
}

CltReport clt_tests(const Ensemble& ensemble, std::int64_t n, double alpha, std::int64_t min_replicas) {
  return clt_tests(positions_at(ensemble, n), alpha, min_replicas);
}

// ---------------------------------------------------------------------------
// Regeneration increments

RegenStats regeneration_statistics(const Ensemble& ensemble, double alpha) {
  RegenStats rs;
  const int d = ensemble.dimension;
  std::vector<double> first, second, dts;
  std::vector<std::vector<double>> dy(d);
  for (const auto& rep : ensemble.replicas) {
    const auto& incs = rep.regen.increments;
    const std::size_t half = incs.size() / 2;
    for (std::size_t i = 0; i < incs.size(); ++i) {
      const auto dt = static_cast<double>(incs[i].dt);
      dts.push_back(dt);
      if (i < half) first.push_back(dt);
      else if (i >= incs.size() - half) second.push_back(dt);
      for (int a = 0; a < d; ++a) dy[a].push_back(static_cast<double>(incs[i].dy[a]));
    }
  }
  rs.increments = static_cast<std::int64_t>(dts.size());
  if (dts.empty()) return rs;
  std::tie(rs.mean_dt, rs.se_dt) = mean_se(std::span<const double>(dts));
  if (!first.empty() && !second.empty()) {
    rs.halves = ks_two_sample(first, second);
    rs.tests.push_back({"regen.halves_ks", rs.halves.statistic, rs.halves.p_value, "p > " + fmt(alpha),
                        rs.halves.p_value > alpha});
  }
  rs.dy_centered = true;
  for (int a = 0; a < d; ++a) {
    const auto [m, se] = mean_se(std::span<const double>(dy[a]));
    rs.dy_mean.push_back(m);
    rs.dy_se.push_back(se);
    const bool ok = std::abs(m) <= 3.0 * se;
    rs.dy_centered = rs.dy_centered && ok;
    rs.tests.push_back({"regen.dy_mean_axis" + std::to_string(a), m, std::nan(""), "|mean| <= 3 SE", ok});
  }
  return rs;
}

PooledSummary summarize(const Ensemble& ensemble, const AnalysisOptions& options) {
  PooledSummary out;
  std::vector<std::int64_t> msd_at_n = ensemble.checkpoints;
  if (msd_at_n.empty() || msd_at_n.back() != ensemble.horizon) msd_at_n.push_back(ensemble.horizon);
  out.msd = msd_curve(ensemble, msd_at_n);
  if (options.returns) out.returns = return_statistics(ensemble, options.return_cutoff);
  if (options.clt) {
    const auto n = ensemble.checkpoints.empty() ? ensemble.horizon : ensemble.checkpoints.back();
    out.clt = clt_tests(ensemble, n, options.alpha, options.clt_min_replicas);
    out.tests.insert(out.tests.end(), out.clt->tests.begin(), out.clt->tests.end());
  }
  if (options.regen) {
    out.regen = regeneration_statistics(ensemble, options.alpha);
    out.tests.insert(out.tests.end(), out.regen->tests.begin(), out.regen->tests.end());
  }
  if (options.tail) {
    std::vector<double> dts;
    for (const auto& rep : ensemble.replicas) {
      for (const auto& inc : rep.regen.increments) dts.push_back(static_cast<double>(inc.dt));
    }
    if (dts.size() >= 2) {
      try {
        out.tail = hill_tail_index(dts, options.tail_fraction);
      } catch (const DomainError&) {
        // light tail: the top order statistics coincide
      }
    }
  }
  return out;
}

}  // namespace memwalk
