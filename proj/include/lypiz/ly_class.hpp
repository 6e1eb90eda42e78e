#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lypiz/distribution.hpp"
#include "lypiz/error.hpp"
#include "lypiz/mgf.hpp"
#include "lypiz/zeros.hpp"

namespace lypiz {

/// Discretised N(0, sigma^2) on the lattice spacing * Z, truncated at |x| <= cutoff.
inline DiscretizedDistribution discretized_gaussian(double sigma, double spacing = 0.05, double cutoff = 8.0) {
  if (!(sigma > 0.0) || !(spacing > 0.0)) throw InvalidArgument("ly-class", "gaussian needs sigma, spacing > 0");
  std::vector<Atom> atoms;
  const long m = static_cast<long>(std::floor(cutoff / spacing));
  for (long j = -m; j <= m; ++j) {
    const double x = spacing * static_cast<double>(j);
    atoms.push_back(Atom{x, std::exp(-0.5 * x * x / (sigma * sigma))});
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms), 0, true);
}

inline DiscretizedDistribution rademacher(double scale = 1.0) {
  return DiscretizedDistribution::from_atoms({Atom{-scale, 0.5}, Atom{scale, 0.5}}, 0, true);
}

/// True iff the law matches its reflection: atoms pair up as x <-> -x within
/// the coalescing tolerance and their weights agree within `tol`.
inline bool check_symmetry(const DiscretizedDistribution& d, double tol = 1e-12) {
  const auto& a = d.atoms();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& lo = a[i];
    const Atom& hi = a[n - 1 - i];
    if (std::abs(lo.x + hi.x) > kCoalesceTolerance) return false;
    if (std::abs(lo.w - hi.w) > tol) return false;
  }
  return true;
}

enum class TailMethod { FromMoments, FromTailProbabilities };

/// Stretched-exponential tail P(|X| > t) ~ exp(-b t^a).
struct TailProfile {
  double exponent_a = 2.0;
  double coefficient = 0.0;  // b-hat
  double window_lo = 0.0;    // first k (moments) or t (tail) used
  double window_hi = 0.0;
  double fit_residual = 0.0;
  TailMethod method = TailMethod::FromMoments;
  /// Moment fits: log m_{2k} ~ slope k log k + linear k (+ intercept).
  double slope = 0.0;
  double linear = 0.0;
};

namespace detail {

struct LinearFit {
  Eigen::VectorXd coef;
  double weighted_rms = 0.0;
  Eigen::MatrixXd covariance;  // (X^T W X)^{-1}
};

inline LinearFit weighted_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * x;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;
  LinearFit fit;
  fit.coef = xw.colPivHouseholderQr().solve(yw);
  const Eigen::VectorXd r = y - x * fit.coef;
  fit.weighted_rms = std::sqrt((w.array() * r.array().square()).sum() / w.sum());
  fit.covariance = (xw.transpose() * xw).inverse();
  return fit;
}

}  // namespace detail

/// Stretched exponent from even absolute moments m_{2k} = E|X|^{2k}, k = 1..K.
/// Fits log m_{2k} against k log k (slope s) with weights k over k >= 3; the
/// exponent is a = 2/s. An intercept column is added when at least four
/// points remain.
inline TailProfile tail_exponent_from_moments(std::span<const double> m2k) {
  const std::string mod = "ly-class";
  if (m2k.size() < 4) throw InvalidArgument(mod, "tail_exponent needs K >= 4 moments");
  bool up = true;
  bool down = true;
  for (std::size_t i = 0; i < m2k.size(); ++i) {
    if (!(m2k[i] > 0.0) || !std::isfinite(m2k[i])) throw InvalidArgument(mod, "non-positive or non-finite moment");
    if (i > 0) {
      up = up && m2k[i] >= m2k[i - 1];
      down = down && m2k[i] <= m2k[i - 1];
    }
  }
  if (!up && !down) throw InvalidArgument(mod, "moments are not monotone in k");

  const std::size_t first = 3;
  const std::size_t points = m2k.size() - (first - 1);
  const int cols = points >= 4 ? 3 : 2;
  Eigen::MatrixXd x(points, cols);
  Eigen::VectorXd y(points);
  Eigen::VectorXd w(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double k = static_cast<double>(first + i);
    x(i, 0) = k * std::log(k);
    x(i, 1) = k;
    if (cols == 3) x(i, 2) = 1.0;
    y(i) = std::log(m2k[first + i - 1]);
    w(i) = k;
  }
  const auto fit = detail::weighted_least_squares(x, y, w);
  TailProfile p;
  p.method = TailMethod::FromMoments;
  p.slope = fit.coef(0);
  p.linear = fit.coef(1);
  if (!(p.slope > 0.0)) throw InvalidArgument(mod, "moment growth slope is not positive");
  p.exponent_a = 2.0 / p.slope;
  // E|X|^{2k} ~ Gamma(2k/a) b^{-2k/a}  =>  linear = s (log s - 1 - log b).
  p.coefficient = p.slope * std::exp(-1.0 - p.linear / p.slope);
  p.window_lo = static_cast<double>(first);
  p.window_hi = static_cast<double>(m2k.size());
  p.fit_residual = fit.weighted_rms;
  return p;
}

/// Stretched exponent from tail probabilities (t, P(|X| > t)): slope of
/// log(-log P) against log t.
inline TailProfile tail_exponent_from_tail(std::span<const std::pair<double, double>> tail) {
  const std::string mod = "ly-class";
  if (tail.size() < 3) throw InvalidArgument(mod, "tail fit needs at least 3 points");
  Eigen::MatrixXd x(tail.size(), 2);
  Eigen::VectorXd y(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    const auto [t, p] = tail[i];
    if (!(t > 0.0) || !(p > 0.0 && p < 1.0)) throw InvalidArgument(mod, "tail points need t > 0 and P in (0, 1)");
    x(i, 0) = std::log(t);
    x(i, 1) = 1.0;
    y(i) = std::log(-std::log(p));
  }
  const auto fit = detail::weighted_least_squares(x, y, Eigen::VectorXd::Ones(tail.size()));
  TailProfile prof;
  prof.method = TailMethod::FromTailProbabilities;
  prof.exponent_a = fit.coef(0);
  if (!(prof.exponent_a > 0.0)) throw InvalidArgument(mod, "fitted tail exponent is not positive");
  prof.coefficient = std::exp(fit.coef(1));
  prof.window_lo = tail.front().first;
  prof.window_hi = tail.back().first;
  prof.fit_residual = fit.weighted_rms;
  return prof;
}

/// Stretched exponent 2/beta^2 of the continuum GMC modulus tail.
inline double gmc_tail_exponent(double beta_sq) { return 2.0 / beta_sq; }

enum class SubGaussian { Yes, No, Undetermined };
enum class PizEvidence { PizInTestedRegion, OffAxisFound, Undetermined };
enum class LyVerdict { ConsistentWithL, ExcludedBySlowtail, ExcludedByOffAxisZero, Undetermined };

inline const char* to_string(SubGaussian s) {
  switch (s) {
    case SubGaussian::Yes: return "yes";
    case SubGaussian::No: return "no";
    case SubGaussian::Undetermined: return "undetermined";
  }
  return "undetermined";
}

inline const char* to_string(PizEvidence p) {
  switch (p) {
    case PizEvidence::PizInTestedRegion: return "PIZ-in-tested-region";
    case PizEvidence::OffAxisFound: return "off-axis-found";
    case PizEvidence::Undetermined: return "undetermined";
  }
  return "undetermined";
}

inline const char* to_string(LyVerdict v) {
  switch (v) {
    case LyVerdict::ConsistentWithL: return "consistent-with-L";
    case LyVerdict::ExcludedBySlowtail: return "excluded-by-slowtail2";
    case LyVerdict::ExcludedByOffAxisZero: return "excluded-by-off-axis-zero";
    case LyVerdict::Undetermined: return "undetermined";
  }
  return "undetermined";
}

struct ClassVerdict {
  bool symmetric = false;
  SubGaussian subgaussian = SubGaussian::Undetermined;
  double b_hat = 0.0;  // meaningful when subgaussian == Yes
  PizEvidence piz = PizEvidence::Undetermined;
  LyVerdict verdict = LyVerdict::Undetermined;
  /// A confident slow-tail fit coexists with a PIZ certificate.
  bool numerical_tension = false;
  std::string note;
};

struct ClassifyInput {
  std::optional<DiscretizedDistribution> distribution;
  std::optional<TailProfile> tail;
  std::optional<ZeroReport> zeros;
  /// Overrides the symmetry flag (e.g. for a tail profile of a limiting law).
  std::optional<bool> symmetric;
};

struct ClassifyOptions {
  double residual_threshold = 0.05;
  /// Fits with a <= 1 + poisson_guard are never excluded.
  double poisson_guard = 0.05;
  /// Fits with a >= 2 - gaussian_margin count as sub-Gaussian evidence.
  double gaussian_margin = 0.05;
};

inline bool slow_tail_confident(const TailProfile& t, const ClassifyOptions& o) {
  return t.fit_residual < o.residual_threshold && t.exponent_a > 1.0 + o.poisson_guard &&
         t.exponent_a < 2.0 - o.gaussian_margin;
}

inline ClassVerdict classify(const ClassifyInput& in, const ClassifyOptions& opts = {}) {
  ClassVerdict v;
  if (in.symmetric) {
    v.symmetric = *in.symmetric;
  } else if (in.distribution) {
    v.symmetric = check_symmetry(*in.distribution);
  } else {
    v.symmetric = true;
  }

  if (in.tail) {
    const TailProfile& t = *in.tail;
    if (t.fit_residual < opts.residual_threshold && t.exponent_a >= 2.0 - opts.gaussian_margin) {
      v.subgaussian = SubGaussian::Yes;
      v.b_hat = t.coefficient;
    } else if (slow_tail_confident(t, opts)) {
      v.subgaussian = SubGaussian::No;
    }
  } else if (in.distribution) {
    // Bounded support: E exp(b X^2) <= e with b = 1 / max|x|^2.
    v.subgaussian = SubGaussian::Yes;
    const double m = in.distribution->max_abs();
    v.b_hat = m > 0.0 ? 1.0 / (m * m) : std::numeric_limits<double>::infinity();
  }

  if (in.zeros) {
    switch (in.zeros->verdict) {
      case PizVerdict::PizInRegion: v.piz = PizEvidence::PizInTestedRegion; break;
      case PizVerdict::OffAxisZeroFound: v.piz = PizEvidence::OffAxisFound; break;
      case PizVerdict::Inconclusive: v.piz = PizEvidence::Undetermined; break;
    }
  }

  const bool slow = in.tail && slow_tail_confident(*in.tail, opts);
  if (v.piz == PizEvidence::OffAxisFound) {
    v.verdict = LyVerdict::ExcludedByOffAxisZero;
  } else if (slow) {
    v.verdict = LyVerdict::ExcludedBySlowtail;
    if (v.piz == PizEvidence::PizInTestedRegion) {
      v.numerical_tension = true;
      v.note = "slow tail predicts off-axis zeros but none were found in the tested region";
    }
  } else if (!v.symmetric) {
    v.note = "law is not symmetric";
  } else if (v.piz == PizEvidence::PizInTestedRegion && v.subgaussian == SubGaussian::Yes) {
    v.verdict = LyVerdict::ConsistentWithL;
  } else if (in.tail && in.tail->exponent_a <= 1.0 + opts.poisson_guard) {
    v.note = "tail exponent at or below the Poisson-type guard; no exclusion";
  }
  return v;
}

struct WeakLimitEntry {
  double variance = 0.0;
  double distance_to_previous = std::numeric_limits<double>::quiet_NaN();
  double distance_to_limit = std::numeric_limits<double>::quiet_NaN();
  ZeroReport zeros;
  std::optional<Complex> first_zero;  // lowest located zero
};

struct WeakLimitReport {
  std::vector<WeakLimitEntry> entries;
  bool distances_to_limit_nonincreasing = true;
  bool consecutive_distances_nonincreasing = true;
  double max_variance = 0.0;
  bool variance_bounded = true;
  bool all_piz = true;
  std::optional<ClassVerdict> limit_verdict;
  std::optional<ZeroReport> limit_zeros;
  /// The limit fails sub-Gaussianity, so all but finitely many members must
  /// carry off-axis zeros.
  bool corollary_seq_triggered = false;
  /// Triggered, yet every member was PIZ inside the tested region.
  bool corollary_seq_contradiction = false;
  bool consistent_with_weak_limit = false;
  std::string statement;
};

using WeakLimit = std::variant<DiscretizedDistribution, TailProfile>;

inline WeakLimitReport weak_limit_harness(const std::vector<DiscretizedDistribution>& sequence, const WeakLimit& limit,
                                          const Rect& region, double tol = 1e-10, const LocateOptions& lopts = {},
                                          const ClassifyOptions& copts = {}) {
  if (sequence.size() < 3) throw InvalidArgument("ly-class", "weak_limit_harness needs at least 3 laws");
  WeakLimitReport rep;
  const DiscretizedDistribution* limit_dist = std::get_if<DiscretizedDistribution>(&limit);

  for (std::size_t i = 0; i < sequence.size(); ++i) {
    WeakLimitEntry e;
    e.variance = sequence[i].variance();
    if (i > 0) e.distance_to_previous = kolmogorov_distance(sequence[i - 1], sequence[i]);
    if (limit_dist) e.distance_to_limit = kolmogorov_distance(sequence[i], *limit_dist);
    e.zeros = locate_zeros(EntireMGF(sequence[i]), region, tol, lopts);
    if (!e.zeros.zeros.empty()) e.first_zero = e.zeros.zeros.front().location;
    rep.all_piz = rep.all_piz && e.zeros.verdict == PizVerdict::PizInRegion;
    rep.max_variance = std::max(rep.max_variance, e.variance);
    rep.entries.push_back(std::move(e));
  }
  const double slack = 1e-12;
  for (std::size_t i = 1; i < rep.entries.size(); ++i) {
    if (limit_dist && rep.entries[i].distance_to_limit > rep.entries[i - 1].distance_to_limit + slack) {
      rep.distances_to_limit_nonincreasing = false;
    }
    if (i > 1 && rep.entries[i].distance_to_previous > rep.entries[i - 1].distance_to_previous + slack) {
      rep.consecutive_distances_nonincreasing = false;
    }
  }
  // Bounded: the second half never exceeds four times the first-half maximum.
  const std::size_t mid = rep.entries.size() / 2;
  double first_half = 0.0;
  double second_half = 0.0;
  for (std::size_t i = 0; i < rep.entries.size(); ++i) {
    double& bucket = i < mid ? first_half : second_half;
    bucket = std::max(bucket, rep.entries[i].variance);
  }
  rep.variance_bounded = std::isfinite(rep.max_variance) && second_half <= 4.0 * first_half;

  ClassifyInput cin;
  if (limit_dist) {
    cin.distribution = *limit_dist;
    rep.limit_zeros = locate_zeros(EntireMGF(*limit_dist), region, tol, lopts);
    cin.zeros = rep.limit_zeros;
  } else {
    cin.tail = std::get<TailProfile>(limit);
    cin.symmetric = true;
  }
  rep.limit_verdict = classify(cin, copts);

  const bool limit_not_subgaussian = rep.limit_verdict->subgaussian == SubGaussian::No;
  rep.corollary_seq_triggered = limit_not_subgaussian;
  rep.corollary_seq_contradiction = limit_not_subgaussian && rep.all_piz;
  rep.consistent_with_weak_limit = rep.all_piz && rep.variance_bounded &&
                                   rep.limit_verdict->verdict != LyVerdict::ExcludedBySlowtail &&
                                   rep.limit_verdict->verdict != LyVerdict::ExcludedByOffAxisZero;
  if (rep.corollary_seq_contradiction) {
    rep.statement =
        "limit is not sub-Gaussian: all but finitely many laws must have off-axis zeros, but every law was PIZ in the "
        "tested region (enlarge the region or the index)";
  } else if (rep.corollary_seq_triggered) {
    rep.statement = "limit is not sub-Gaussian: all but finitely many laws must have off-axis zeros";
  } else if (rep.consistent_with_weak_limit) {
    rep.statement = "every law is PIZ in the tested region with bounded variance; the limit is consistent with L";
  } else {
    rep.statement = "no conclusion";
  }
  return rep;
}

}  // namespace lypiz
