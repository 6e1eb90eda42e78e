#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lypiz/error.hpp"
#include "lypiz/mgf.hpp"
#include "lypiz/numeric.hpp"

namespace lypiz {

/// Axis-aligned rectangle [re_min, re_max] x [im_min, im_max] i.
struct Rect {
  double re_min = 0.0;
  double re_max = 0.0;
  double im_min = 0.0;
  double im_max = 0.0;

  double width() const { return re_max - re_min; }
  double height() const { return im_max - im_min; }
  double diameter() const { return std::hypot(width(), height()); }
  Complex center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
  bool contains(Complex z, double pad = 0.0) const {
    return z.real() >= re_min - pad && z.real() <= re_max + pad && z.imag() >= im_min - pad &&
           z.imag() <= im_max + pad;
  }
  Rect expanded(double left, double right, double bottom, double top) const {
    return {re_min - left, re_max + right, im_min - bottom, im_max + top};
  }
};

struct ZeroCountOptions {
  /// A contour point with |f| < boundary_floor * sum_j w_j|e^{z x_j}| counts as
  /// touching a zero.
  double boundary_floor = 1e-9;
  /// Segments are bisected until every phase increment is below this (< pi/2).
  double max_phase_step = kPi / 4.0;
  int max_depth = 40;
  int max_perturbations = 8;
  double perturbation_step = 1e-3;
};

namespace detail {

class PhaseTracker {
 public:
  PhaseTracker(const EntireMGF& f, const ZeroCountOptions& opts) : f_(f), opts_(opts) {
    initial_step_ = std::min(0.1, 0.5 / std::max(1.0, f.max_abs_atom()));
  }

  // Winding number of f around the rectangle, or nullopt if the contour
  // passes too close to a zero.
  std::optional<int> winding(const Rect& r) {
    const std::array<Complex, 5> corners = {Complex(r.re_min, r.im_min), Complex(r.re_max, r.im_min),
                                            Complex(r.re_max, r.im_max), Complex(r.re_min, r.im_max),
                                            Complex(r.re_min, r.im_min)};
    double total = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
      auto d = segment(corners[s], corners[s + 1]);
      if (!d) return std::nullopt;
      total += *d;
    }
    const double turns = total / kTwoPi;
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 0.05) return std::nullopt;
    return static_cast<int>(rounded);
  }

 private:
  std::optional<ScaledValue> sample(Complex z) {
    ScaledValue v = f_.eval_scaled(z);
    if (!(std::abs(v.value) >= opts_.boundary_floor * v.magnitude)) return std::nullopt;
    return v;
  }

  std::optional<double> segment(Complex a, Complex b) {
    const double len = std::abs(b - a);
    const int pieces = std::max(1, static_cast<int>(std::ceil(len / initial_step_)));
    auto fa = sample(a);
    if (!fa) return std::nullopt;
    double total = 0.0;
    for (int i = 1; i <= pieces; ++i) {
      const Complex zb = a + (b - a) * (static_cast<double>(i) / pieces);
      const Complex za = a + (b - a) * (static_cast<double>(i - 1) / pieces);
      auto fb = sample(zb);
      if (!fb) return std::nullopt;
      auto d = refine(za, zb, *fa, *fb, 0);
      if (!d) return std::nullopt;
      total += *d;
      fa = fb;
    }
    return total;
  }

  std::optional<double> refine(Complex a, Complex b, const ScaledValue& fa, const ScaledValue& fb, int depth) {
    const double d = std::arg(fb.value / fa.value);
    if (std::abs(d) < opts_.max_phase_step) return d;
    if (depth >= opts_.max_depth) return std::nullopt;
    const Complex m = 0.5 * (a + b);
    auto fm = sample(m);
    if (!fm) return std::nullopt;
    auto left = refine(a, m, fa, *fm, depth + 1);
    if (!left) return std::nullopt;
    auto right = refine(m, b, *fm, fb, depth + 1);
    if (!right) return std::nullopt;
    return *left + *right;
  }

  const EntireMGF& f_;
  ZeroCountOptions opts_;
  double initial_step_ = 0.1;
};

}  // namespace detail

/// Argument-principle zero count, or nullopt when the boundary passes within
/// the floor of a zero.
inline std::optional<int> try_count_zeros(const EntireMGF& f, const Rect& rect, const ZeroCountOptions& opts = {}) {
  detail::PhaseTracker tracker(f, opts);
  return tracker.winding(rect);
}

/// Rectangle actually used (after perturbation) plus its zero count.
struct RectCount {
  Rect rect;
  int count = 0;
};

/// Counts zeros inside `rect`; if the contour touches a zero the rectangle is
/// pushed outward by growing amounts, up to max_perturbations attempts.
inline RectCount count_zeros_perturbed(const EntireMGF& f, const Rect& rect, const ZeroCountOptions& opts = {}) {
  if (!(rect.width() > 0.0 && rect.height() > 0.0)) {
    throw InvalidArgument("zero-analysis", "rectangle must have positive width and height");
  }
  Rect r = rect;
  for (int attempt = 0; attempt <= opts.max_perturbations; ++attempt) {
    if (auto c = try_count_zeros(f, r, opts)) return {r, *c};
    const double d = opts.perturbation_step * (attempt + 1);
    r = rect.expanded(0.71 * d, 1.13 * d, 0.89 * d, 1.07 * d);
  }
  throw NumericalFailure("zero-analysis", "zero on contour: boundary floor violated after " +
                                              std::to_string(opts.max_perturbations) + " perturbations");
}

inline int count_zeros_rectangle(const EntireMGF& f, const Rect& rect, const ZeroCountOptions& opts = {}) {
  return count_zeros_perturbed(f, rect, opts).count;
}

struct LocatedZero {
  Complex location;
  double residual = 0.0;  // |f(location)|
  bool refined = false;
  int multiplicity = 1;
};

enum class PizVerdict { PizInRegion, OffAxisZeroFound, Inconclusive };

inline const char* to_string(PizVerdict v) {
  switch (v) {
    case PizVerdict::PizInRegion:
      return "PIZ-in-region";
    case PizVerdict::OffAxisZeroFound:
      return "off-axis-zero-found";
    case PizVerdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

struct ZeroReport {
  Rect requested_region;
  Rect region;  // after any boundary perturbation
  std::vector<LocatedZero> zeros;
  std::vector<RectCount> counts;  // leaves of the subdivision
  int total_count = 0;
  PizVerdict verdict = PizVerdict::Inconclusive;
  double max_abs_re = 0.0;
  double tol = 1e-10;
  /// For symmetric sources: every off-axis zero z has its partner -conj(z).
  bool quadruple_consistent = true;

  int listed_with_multiplicity() const {
    int s = 0;
    for (const auto& z : zeros) s += z.multiplicity;
    return s;
  }
};

struct LocateOptions {
  ZeroCountOptions count;
  double leaf_diameter = 0.1;
  double min_diameter = 1e-7;
  int newton_max_iter = 100;
};

namespace detail {

inline bool residual_small(const ScaledValue& v, double tol) {
  // |f| <= tol * max(1, sum w|e^{zx}|), compared on the common scale.
  const double lhs = std::abs(v.value);
  const double floor_term = std::exp(-v.log_scale);
  return lhs <= tol * std::max(floor_term, v.magnitude);
}

struct NewtonResult {
  Complex z;
  bool converged = false;
};

inline NewtonResult newton(const EntireMGF& f, Complex z, double tol, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const ScaledValue v = f.eval_scaled(z);
    if (residual_small(v, tol)) {
      // Two polishing steps; keep them only if they do not hurt.
      for (int p = 0; p < 2; ++p) {
        const ScaledValue fv = f.eval_scaled(z);
        const ScaledValue d = f.derivative_scaled(z);
        if (std::abs(d.value) == 0.0) break;
        const Complex cand = z - fv.value * std::exp(fv.log_scale - d.log_scale) / d.value;
        if (std::abs(f(cand)) <= std::abs(f(z))) z = cand;
      }
      return {z, true};
    }
    const ScaledValue d = f.derivative_scaled(z);
    if (!(std::abs(d.value) > 0.0)) break;
    const Complex step = v.value * std::exp(v.log_scale - d.log_scale) / d.value;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    z -= step;
  }
  return {z, residual_small(f.eval_scaled(z), tol)};
}

}  // namespace detail

/// Locates every zero of f inside `region`: recursive subdivision driven by
/// argument-principle counts until each cell holds one zero and has diameter
/// below leaf_diameter, then Newton refinement to |f| < tol.
inline ZeroReport locate_zeros(const EntireMGF& f, const Rect& region, double tol = 1e-10,
                               const LocateOptions& opts = {}) {
  if (!(tol > 0.0)) throw InvalidArgument("zero-analysis", "tol must be > 0");
  ZeroReport report;
  report.requested_region = region;
  report.tol = tol;
  const RectCount top = count_zeros_perturbed(f, region, opts.count);
  report.region = top.rect;
  report.total_count = top.count;

  static constexpr std::array<double, 10> kSplits = {0.5123, 0.4871, 0.5379, 0.4619, 0.5731,
                                                     0.4237, 0.6143, 0.3889, 0.6571, 0.3461};

  bool any_unrefined = false;
  std::vector<RectCount> stack{top};
  while (!stack.empty()) {
    const RectCount cell = stack.back();
    stack.pop_back();
    if (cell.count == 0) {
      report.counts.push_back(cell);
      continue;
    }
    const Rect& r = cell.rect;
    const double diam = r.diameter();
    if ((cell.count == 1 && diam < opts.leaf_diameter) || diam < opts.min_diameter) {
      report.counts.push_back(cell);
      LocatedZero zero;
      zero.multiplicity = cell.count;
      const double pad = std::max(0.5 * diam, 1e-9);
      const std::array<Complex, 5> starts = {
          r.center(), Complex(r.re_min + 0.25 * r.width(), r.im_min + 0.25 * r.height()),
          Complex(r.re_min + 0.75 * r.width(), r.im_min + 0.25 * r.height()),
          Complex(r.re_min + 0.25 * r.width(), r.im_min + 0.75 * r.height()),
          Complex(r.re_min + 0.75 * r.width(), r.im_min + 0.75 * r.height())};
      zero.location = r.center();
      for (const Complex& s : starts) {
        const auto res = detail::newton(f, s, tol, opts.newton_max_iter);
        if (res.converged && r.contains(res.z, pad)) {
          zero.location = res.z;
          zero.refined = true;
          break;
        }
      }
      zero.residual = std::abs(f(zero.location));
      any_unrefined = any_unrefined || !zero.refined;
      report.zeros.push_back(zero);
      continue;
    }

    bool split_done = false;
    const bool along_re = r.width() >= r.height();
    for (double t : kSplits) {
      Rect a = r;
      Rect b = r;
      if (along_re) {
        const double cut = r.re_min + t * r.width();
        a.re_max = cut;
        b.re_min = cut;
      } else {
        const double cut = r.im_min + t * r.height();
        a.im_max = cut;
        b.im_min = cut;
      }
      const auto ca = try_count_zeros(f, a, opts.count);
      if (!ca) continue;
      const auto cb = try_count_zeros(f, b, opts.count);
      if (!cb) continue;
      if (*ca + *cb != cell.count || *ca < 0 || *cb < 0) continue;
      // Push b first so a (lower / left) is processed first.
      stack.push_back({b, *cb});
      stack.push_back({a, *ca});
      split_done = true;
      break;
    }
    if (!split_done) {
      report.counts.push_back(cell);
      LocatedZero zero{r.center(), std::abs(f(r.center())), false, cell.count};
      any_unrefined = true;
      report.zeros.push_back(zero);
    }
  }

  std::sort(report.zeros.begin(), report.zeros.end(), [](const LocatedZero& a, const LocatedZero& b) {
    if (a.location.imag() != b.location.imag()) return a.location.imag() < b.location.imag();
    return a.location.real() < b.location.real();
  });

  const double off_axis = 100.0 * tol;
  bool off_axis_found = false;
  for (const auto& z : report.zeros) {
    report.max_abs_re = std::max(report.max_abs_re, std::abs(z.location.real()));
    if (z.refined && std::abs(z.location.real()) > off_axis) off_axis_found = true;
  }
  if (off_axis_found) {
    report.verdict = PizVerdict::OffAxisZeroFound;
  } else if (any_unrefined) {
    report.verdict = PizVerdict::Inconclusive;
  } else {
    report.verdict = PizVerdict::PizInRegion;
  }

  // Quadruple structure {+-z, +-conj z}: inside a region symmetric about the
  // imaginary axis, -conj(z) must also be listed.
  const bool mirror_region = std::abs(report.region.re_min + report.region.re_max) <=
                             1e-12 * std::max(1.0, report.region.width());
  if (f.symmetric() && mirror_region) {
    for (const auto& z : report.zeros) {
      if (std::abs(z.location.real()) <= off_axis) continue;
      const Complex partner = -std::conj(z.location);
      const bool found = std::any_of(report.zeros.begin(), report.zeros.end(), [&](const LocatedZero& o) {
        return std::abs(o.location - partner) <= 1e-6 * std::max(1.0, std::abs(partner));
      });
      if (!found) report.quadruple_consistent = false;
    }
  }
  return report;
}

/// Largest displacement between matched zeros of two reports (each zero of
/// `a` against its nearest in `b`, and vice versa); infinite when the counts
/// differ.
inline double zero_displacement(const ZeroReport& a, const ZeroReport& b) {
  if (a.listed_with_multiplicity() != b.listed_with_multiplicity()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  auto sweep = [&worst](const ZeroReport& x, const ZeroReport& y) {
    for (const auto& z : x.zeros) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : y.zeros) best = std::min(best, std::abs(z.location - o.location));
      worst = std::max(worst, best);
    }
  };
  sweep(a, b);
  sweep(b, a);
  return worst;
}

/// Truncated Hadamard product e^{Bz^2} prod_k (1 + z^2 / y_k^2) fitted from
/// the imaginary-axis zeros below a height.
struct HadamardFit {
  double B = 0.0;
  std::vector<double> y;           // strictly increasing ordinates
  std::vector<int> multiplicity;   // parallel to y
  double inverse_square_sum = 0.0; // sum_k mult_k / y_k^2 over listed zeros
  double tail_correction = 0.0;    // extrapolated sum over zeros above the height
  double variance = 0.0;
  double variance_residual = 0.0;  // |Var - 2(B + sum + tail)|
};

/// Tail sum_{j >= 1} 1/(y_last + j * spacing)^2 with the spacing taken as the
/// mean of the last few gaps (zero-counting density extrapolated as uniform).
inline double extrapolated_inverse_square_tail(const std::vector<double>& y) {
  if (y.size() < 2) return 0.0;
  const std::size_t gaps = std::min<std::size_t>(5, y.size() - 1);
  const double spacing = (y.back() - y[y.size() - 1 - gaps]) / static_cast<double>(gaps);
  if (!(spacing > 0.0)) return 0.0;
  return trigamma(y.back() / spacing + 1.0) / (spacing * spacing);
}

inline HadamardFit hadamard_fit(const EntireMGF& f, const ZeroReport& report, double height) {
  const std::string mod = "zero-analysis";
  if (!f.symmetric()) throw InvalidArgument(mod, "hadamard_fit requires a symmetric source");
  const double off_axis = 100.0 * report.tol;
  std::vector<std::pair<double, int>> ords;
  for (const auto& z : report.zeros) {
    if (std::abs(z.location.real()) > off_axis) {
      throw InvalidArgument(mod, "hadamard_fit: off-axis zero at " + std::to_string(z.location.real()) + " + " +
                                     std::to_string(z.location.imag()) + "i");
    }
    const double yk = z.location.imag();
    if (yk > 0.0 && yk <= height) ords.emplace_back(yk, z.multiplicity);
  }
  std::sort(ords.begin(), ords.end());
  HadamardFit fit;
  CompensatedSum s;
  for (const auto& [yk, m] : ords) {
    if (!fit.y.empty() && yk - fit.y.back() <= 1e-9 * yk) {
      fit.multiplicity.back() += m;
    } else {
      fit.y.push_back(yk);
      fit.multiplicity.push_back(m);
    }
    s.add(m / (yk * yk));
  }
  fit.inverse_square_sum = s.value();
  fit.tail_correction = extrapolated_inverse_square_tail(fit.y);
  fit.variance = f.variance();
  fit.B = std::max(0.0, 0.5 * fit.variance - fit.inverse_square_sum - fit.tail_correction);
  fit.variance_residual = std::abs(fit.variance - 2.0 * (fit.B + fit.inverse_square_sum + fit.tail_correction));
  return fit;
}

}  // namespace lypiz
