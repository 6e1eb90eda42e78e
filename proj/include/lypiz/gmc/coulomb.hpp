#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lypiz/error.hpp"
#include "lypiz/gmc/rng.hpp"
#include "lypiz/numeric.hpp"

namespace lypiz {

using Point = std::complex<double>;

enum class RegionKind { UnitDisk, Disk, UnitSquare };

/// Bounded planar domain U. Disks are centred at the origin; the unit square
/// is [0,1]^2.
struct Region {
  RegionKind kind = RegionKind::UnitDisk;
  double radius = 1.0;

  static Region unit_disk() { return {RegionKind::UnitDisk, 1.0}; }
  static Region disk(double r) {
    if (!(r > 0.0)) throw InvalidArgument("gmc", "disk radius must be > 0");
    return {RegionKind::Disk, r};
  }
  static Region unit_square() { return {RegionKind::UnitSquare, 1.0}; }

  double area() const { return kind == RegionKind::UnitSquare ? 1.0 : kPi * radius * radius; }

  bool contains(Point p) const {
    if (kind == RegionKind::UnitSquare) return p.real() >= 0.0 && p.real() <= 1.0 && p.imag() >= 0.0 && p.imag() <= 1.0;
    return std::abs(p) <= radius;
  }

  /// Maps (u, v) in [0,1)^2 to a uniform point; u is the area fraction
  /// coordinate (r^2/R^2 for disks, x for the square).
  Point from_unit(double u, double v) const {
    if (kind == RegionKind::UnitSquare) return {u, v};
    const double r = radius * std::sqrt(u);
    return std::polar(r, kTwoPi * v);
  }

  std::string name() const {
    switch (kind) {
      case RegionKind::UnitDisk: return "unit-disk";
      case RegionKind::Disk: return "disk(" + std::to_string(radius) + ")";
      case RegionKind::UnitSquare: return "unit-square";
    }
    return "?";
  }
};

/// k positive charges x and k negative charges y in U at coupling beta^2.
struct CoulombConfig {
  std::vector<Point> positive;
  std::vector<Point> negative;
  double beta_sq = 1.0;
  Region region;
};

/// log of (prod_{i<j} |x_i - x_j| |y_i - y_j| / prod_{i,j} |x_i - y_j|)^{beta^2}.
inline double log_coulomb_weight(const CoulombConfig& c) {
  const std::string mod = "gmc";
  const std::size_t k = c.positive.size();
  if (k == 0 || c.negative.size() != k) throw InvalidArgument(mod, "Coulomb configuration needs k >= 1 charges of each sign");
  if (!(c.beta_sq > 0.0 && c.beta_sq < 2.0)) throw InvalidArgument(mod, "beta^2 must lie in (0, 2)");
  CompensatedSum acc;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = std::abs(c.positive[i] - c.negative[j]);
      if (d == 0.0) {
        throw NumericalFailure(mod, "coincident opposite charges x_" + std::to_string(i) + " = y_" + std::to_string(j) +
                                        ": Coulomb weight diverges");
      }
      acc.add(-std::log(d));
    }
    for (std::size_t j = i + 1; j < k; ++j) {
      acc.add(std::log(std::abs(c.positive[i] - c.positive[j])));
      acc.add(std::log(std::abs(c.negative[i] - c.negative[j])));
    }
  }
  return c.beta_sq * acc.value();
}

inline double coulomb_weight(const CoulombConfig& c) {
  for (const auto& p : c.positive) {
    if (!c.region.contains(p)) throw InvalidArgument("gmc", "charge outside the domain");
  }
  for (const auto& p : c.negative) {
    if (!c.region.contains(p)) throw InvalidArgument("gmc", "charge outside the domain");
  }
  return std::exp(log_coulomb_weight(c));
}

struct MomentEstimate {
  double beta_sq = 0.0;
  int k = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  bool low_confidence = false;
};

struct MonteCarloOptions {
  int batches = 100;
  /// Stratify the area coordinate of the first positive charge within each
  /// batch (one stratum per sample).
  bool stratified = false;
  int threads = 0;
  std::uint64_t min_samples = 10'000;
  int max_k = 6;
};

/// E|W_U|^{2k} = |U|^{2k} E[weight] over uniform 2k-tuples. Batch b draws its
/// samples from stream b of the master seed; the standard error comes from
/// the spread of batch means.
inline MomentEstimate mc_moment(const Region& region, double beta_sq, int k, std::uint64_t samples, std::uint64_t seed,
                                MonteCarloOptions opts = {}) {
  const std::string mod = "gmc";
  if (!(beta_sq > 0.0 && beta_sq < 2.0)) throw InvalidArgument(mod, "beta^2 must lie in (0, 2)");
  if (k < 1 || k > opts.max_k) throw InvalidArgument(mod, "k must lie in [1, " + std::to_string(opts.max_k) + "]");
  if (samples < opts.min_samples) throw InvalidArgument(mod, "need at least " + std::to_string(opts.min_samples) + " samples");
  if (opts.batches < 2) throw InvalidArgument(mod, "need at least 2 batches");
  const std::uint64_t batches = static_cast<std::uint64_t>(opts.batches);
  const std::uint64_t per_batch = samples / batches;
  if (per_batch == 0) throw InvalidArgument(mod, "fewer samples than batches");

  std::vector<double> batch_mean(batches, 0.0);
  parallel_for(batches, resolve_threads(opts.threads), [&](std::size_t b) {
    Rng rng = make_stream(seed, b);
    CoulombConfig cfg{std::vector<Point>(k), std::vector<Point>(k), beta_sq, region};
    CompensatedSum acc;
    for (std::uint64_t s = 0; s < per_batch; ++s) {
      for (int i = 0; i < k; ++i) {
        double u = uniform01(rng);
        if (opts.stratified && i == 0) u = (static_cast<double>(s) + u) / static_cast<double>(per_batch);
        cfg.positive[i] = region.from_unit(u, uniform01(rng));
      }
      for (int i = 0; i < k; ++i) cfg.negative[i] = region.from_unit(uniform01(rng), uniform01(rng));
      double w = 0.0;
      try {
        w = std::exp(log_coulomb_weight(cfg));
      } catch (const NumericalFailure&) {
        w = std::numeric_limits<double>::infinity();
      }
      acc.add(w);
    }
    batch_mean[b] = acc.value() / static_cast<double>(per_batch);
  });

  const double scale = std::pow(region.area(), 2.0 * k);
  CompensatedSum mean_acc;
  for (double m : batch_mean) mean_acc.add(m);
  const double mean = mean_acc.value() / static_cast<double>(batches);
  CompensatedSum var_acc;
  for (double m : batch_mean) var_acc.add((m - mean) * (m - mean));
  const double se = std::sqrt(var_acc.value() / static_cast<double>(batches - 1) / static_cast<double>(batches));

  MomentEstimate e;
  e.beta_sq = beta_sq;
  e.k = k;
  e.estimate = scale * mean;
  e.std_error = scale * se;
  e.samples = per_batch * batches;
  e.seed = seed;
  e.low_confidence = !std::isfinite(e.estimate) || e.std_error > 0.5 * std::abs(e.estimate);
  return e;
}

struct GrowthPoint {
  int k = 0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct GrowthFit {
  double beta_sq_hat = 0.0;
  double c_hat = 0.0;
  double residual = 0.0;       // weighted RMS of log residuals
  double reduced_chi_sq = 0.0;
  double beta_sq_lo = 0.0;     // 95% interval, inflated by max(1, reduced chi^2)
  double beta_sq_hi = 0.0;
  double c_lo = 0.0;
  double c_hi = 0.0;
};

namespace detail {

// Two-sided 97.5% Student t quantiles for 1..10 degrees of freedom.
inline double student_t975(int dof) {
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 10) return table[dof - 1];
  return 1.96 + 2.5 / dof;
}

}  // namespace detail

/// Weighted least squares of log m_{2k} on (k log k, k). Weights are
/// (m / se)^2 when standard errors are given, else 1.
inline GrowthFit moment_growth_fit(const std::vector<GrowthPoint>& points) {
  const std::string mod = "gmc";
  if (points.size() < 4) throw InvalidArgument(mod, "moment_growth_fit needs at least 4 values of k");
  const bool weighted = std::all_of(points.begin(), points.end(), [](const GrowthPoint& p) { return p.std_error > 0.0; });
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const GrowthPoint& p = points[static_cast<std::size_t>(i)];
    if (!(p.estimate > 0.0) || !std::isfinite(p.estimate) || !std::isfinite(p.std_error)) {
      throw InvalidArgument(mod, "non-finite or non-positive moment at k = " + std::to_string(p.k));
    }
    if (p.k < 1) throw InvalidArgument(mod, "k must be >= 1");
    const double k = p.k;
    x(i, 0) = k * std::log(k);
    x(i, 1) = k;
    y(i) = std::log(p.estimate);
    const double rel = p.std_error / p.estimate;
    w(i) = weighted ? 1.0 / (rel * rel) : 1.0;
  }
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * x;
  const Eigen::VectorXd coef = xw.colPivHouseholderQr().solve(sw.asDiagonal() * y);
  const Eigen::VectorXd r = y - x * coef;
  const double chi = (w.array() * r.array().square()).sum();
  const int dof = static_cast<int>(n) - 2;

  GrowthFit f;
  f.beta_sq_hat = coef(0);
  f.c_hat = coef(1);
  f.residual = std::sqrt(chi / w.sum());
  f.reduced_chi_sq = chi / dof;
  Eigen::MatrixXd cov = (xw.transpose() * xw).inverse();
  // Unweighted fits carry no error model; the residual scatter sets the scale.
  cov *= weighted ? std::max(1.0, f.reduced_chi_sq) : f.reduced_chi_sq;
  const double t = detail::student_t975(dof);
  const double hb = t * std::sqrt(cov(0, 0));
  const double hc = t * std::sqrt(cov(1, 1));
  f.beta_sq_lo = f.beta_sq_hat - hb;
  f.beta_sq_hi = f.beta_sq_hat + hb;
  f.c_lo = f.c_hat - hc;
  f.c_hi = f.c_hat + hc;
  return f;
}

struct TailPrediction {
  double exponent = 0.0;
  /// beta^2 in (1, 2): stretched exponent strictly between 1 and 2.
  bool slow_tail_regime = false;
};

inline TailPrediction tail_prediction(double beta_sq) {
  if (!(beta_sq > 0.0 && beta_sq < 2.0)) throw InvalidArgument("gmc", "beta^2 must lie in (0, 2)");
  return {2.0 / beta_sq, beta_sq > 1.0};
}

}  // namespace lypiz
