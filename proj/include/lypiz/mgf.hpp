#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "lypiz/distribution.hpp"
#include "lypiz/numeric.hpp"

namespace lypiz {

using Complex = std::complex<double>;

/// f(z) = value * exp(log_scale). `magnitude` is sum_j w_j |e^{z x_j}| on the
/// same scale; |value| / magnitude measures cancellation.
struct ScaledValue {
  Complex value;
  double log_scale = 0.0;
  double magnitude = 0.0;

  Complex unscaled() const { return value * std::exp(log_scale); }
};

/// The moment generating function z -> E[e^{zX}] of an atomic law, viewed as
/// an entire function. Symmetric sources are evaluated through the cosh
/// pairing over the positive half plus the atom at zero.
class EntireMGF {
 public:
  explicit EntireMGF(DiscretizedDistribution source) : source_(std::move(source)) {
    variance_ = source_.variance();
    max_abs_ = source_.max_abs();
    symmetric_ = exactly_symmetric(source_);
    if (symmetric_) {
      for (const Atom& a : source_.atoms()) {
        if (a.x > 0.0) {
          pairs_.push_back(Atom{a.x, 2.0 * a.w});
        } else if (a.x == 0.0) {
          zero_weight_ += a.w;
        }
      }
    }
  }

  const DiscretizedDistribution& source() const { return source_; }
  double variance() const { return variance_; }
  bool symmetric() const { return symmetric_; }
  double max_abs_atom() const { return max_abs_; }

  ScaledValue eval_scaled(Complex z) const {
    if (symmetric_) return eval_symmetric(z, false);
    return eval_general(z, false);
  }

  /// f'(z) on the scale of eval_scaled(z).
  ScaledValue derivative_scaled(Complex z) const {
    if (symmetric_) return eval_symmetric(z, true);
    return eval_general(z, true);
  }

  Complex operator()(Complex z) const { return eval_scaled(z).unscaled(); }
  Complex derivative(Complex z) const { return derivative_scaled(z).unscaled(); }

 private:
  static bool exactly_symmetric(const DiscretizedDistribution& d) {
    const auto& at = d.atoms();
    const std::size_t n = at.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Atom& a = at[i];
      const Atom& b = at[n - 1 - i];
      if (a.x != -b.x || a.w != b.w) return false;
    }
    return true;
  }

  ScaledValue eval_general(Complex z, bool derivative) const {
    double scale = -std::numeric_limits<double>::infinity();
    for (const Atom& a : source_.atoms()) scale = std::max(scale, z.real() * a.x);
    CompensatedComplexSum sum;
    CompensatedSum mag;
    for (const Atom& a : source_.atoms()) {
      const double re = z.real() * a.x - scale;
      const double im = z.imag() * a.x;
      const double e = std::exp(re);
      const double factor = derivative ? a.w * a.x : a.w;
      sum.add(factor * e * Complex(std::cos(im), std::sin(im)));
      mag.add(std::abs(factor) * e);
    }
    return {sum.value(), scale, mag.value()};
  }

  ScaledValue eval_symmetric(Complex z, bool derivative) const {
    const double scale = std::abs(z.real()) * max_abs_;
    CompensatedComplexSum sum;
    CompensatedSum mag;
    if (!derivative && zero_weight_ > 0.0) {
      const double e = std::exp(-scale);
      sum.add(zero_weight_ * e);
      mag.add(zero_weight_ * e);
    }
    for (const Atom& p : pairs_) {
      const double a = z.real() * p.x;
      const double b = z.imag() * p.x;
      const double ep = std::exp(a - scale);
      const double em = std::exp(-a - scale);
      const double ch = 0.5 * (ep + em);
      const double sh = 0.5 * (ep - em);
      const double c = std::cos(b);
      const double s = std::sin(b);
      // cosh(a + ib) = cosh a cos b + i sinh a sin b; sinh(a + ib) = sinh a cos b + i cosh a sin b
      const Complex term = derivative ? Complex(sh * c, ch * s) : Complex(ch * c, sh * s);
      const double factor = derivative ? p.w * p.x : p.w;
      sum.add(factor * term);
      mag.add(factor * ch);
    }
    return {sum.value(), scale, mag.value()};
  }

  DiscretizedDistribution source_;
  std::vector<Atom> pairs_;
  double zero_weight_ = 0.0;
  double variance_ = 0.0;
  double max_abs_ = 0.0;
  bool symmetric_ = false;
};

inline Complex mgf_eval(const EntireMGF& f, Complex z) { return f(z); }

}  // namespace lypiz
