#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lypiz/error.hpp"
#include "lypiz/numeric.hpp"
#include "lypiz/spin_gibbs.hpp"

namespace lypiz {

/// Translation-invariant transition density on the circle, sampled on the
/// grid theta_k = -pi + 2 pi k / N and stored as a function of the angle
/// difference. `log_normalization` is log of the partition factor that was
/// divided out (e.g. log(2 pi I_0(B)) for the XY step kernel).
class CircleKernel {
 public:
  CircleKernel() = default;
  CircleKernel(std::vector<double> values, double log_normalization)
      : values_(std::move(values)), log_normalization_(log_normalization) {
    if (values_.size() < 2 || values_.size() % 2 != 0) {
      throw InvalidArgument("chain-limit", "kernel grid size must be even and >= 2");
    }
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  double log_normalization() const { return log_normalization_; }
  double normalization() const { return std::exp(log_normalization_); }

  double angle(std::size_t k) const {
    return -kPi + kTwoPi * static_cast<double>(k) / static_cast<double>(values_.size());
  }

  /// Trapezoid integral over (-pi, pi].
  double mass() const {
    return kTwoPi / static_cast<double>(values_.size()) * compensated_sum(values_);
  }

  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

 private:
  std::vector<double> values_;
  double log_normalization_ = 0.0;
};

namespace detail {

// c_m = (2 pi / N) sum_d p(2 pi d / N) e^{-2 pi i m d / N}: the discrete
// characteristic function, c_0 = mass.
inline std::vector<std::complex<double>> characteristic(const CircleKernel& k) {
  const std::size_t n = k.size();
  std::vector<std::complex<double>> shifted(n);
  for (std::size_t d = 0; d < n; ++d) shifted[d] = k.values()[(d + n / 2) % n];
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, shifted);
  const double h = kTwoPi / static_cast<double>(n);
  for (auto& c : spec) c *= h;
  return spec;
}

inline std::vector<double> from_characteristic(const std::vector<std::complex<double>>& c) {
  const std::size_t n = c.size();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> back;
  fft.inv(back, c);  // includes the 1/N factor
  std::vector<double> values(n);
  const double scale = static_cast<double>(n) / kTwoPi;
  for (std::size_t d = 0; d < n; ++d) values[(d + n / 2) % n] = back[d].real() * scale;
  return values;
}

inline void clamp_and_renormalize(std::vector<double>& v, const char* what) {
  for (double& x : v) {
    if (x < -1e-12) {
      throw NumericalFailure("chain-limit", std::string(what) + ": negative density " + std::to_string(x) +
                                                " after inverse transform (grid too coarse)");
    }
    if (x < 0.0) x = 0.0;
  }
  const double mass = kTwoPi / static_cast<double>(v.size()) * compensated_sum(v);
  for (double& x : v) x /= mass;
}

}  // namespace detail

/// XY step density e^{B cos(dtheta)} / int e^{B cos phi} dphi.
inline CircleKernel make_xy_kernel(double inverse_temperature, int grid) {
  if (grid < 2 || grid % 2 != 0) throw InvalidArgument("chain-limit", "grid size must be even and >= 2");
  if (!(inverse_temperature >= 0.0)) throw InvalidArgument("chain-limit", "B must be >= 0");
  const std::size_t n = static_cast<std::size_t>(grid);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = std::exp(inverse_temperature * (std::cos(detail::grid_angle(k, n)) - 1.0));
  }
  const double quad = kTwoPi / static_cast<double>(n) * compensated_sum(v);
  for (double& x : v) x /= quad;
  return CircleKernel(std::move(v), inverse_temperature + std::log(quad));
}

/// n-fold cyclic self-convolution, computed spectrally.
inline CircleKernel kernel_power(const CircleKernel& k, int n) {
  if (n < 1) throw InvalidArgument("chain-limit", "kernel_power needs n >= 1");
  if (n == 1) return k;
  auto c = detail::characteristic(k);
  for (auto& x : c) x = std::pow(x, n);
  auto v = detail::from_characteristic(c);
  detail::clamp_and_renormalize(v, "kernel_power");
  return CircleKernel(std::move(v), n * k.log_normalization());
}

/// Wrapped Gaussian density with variance t/b at angle theta, unit mass.
inline double heat_kernel_density(double theta, double t, double b) {
  const double j = b / t;
  return std::sqrt(j / kTwoPi) * periodized_gaussian(theta, j);
}

inline CircleKernel heat_kernel_circle(double t, double b, int grid) {
  if (!(t > 0.0) || !(b > 0.0)) throw InvalidArgument("chain-limit", "heat kernel needs t, b > 0");
  if (grid < 2 || grid % 2 != 0) throw InvalidArgument("chain-limit", "grid size must be even and >= 2");
  const std::size_t n = static_cast<std::size_t>(grid);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = heat_kernel_density(detail::grid_angle(k, n), t, b);
  const double mass = kTwoPi / static_cast<double>(n) * compensated_sum(v);
  for (double& x : v) x /= mass;
  return CircleKernel(std::move(v), 0.0);
}

struct KernelDistance {
  double sup = 0.0;
  double l1 = 0.0;
};

inline KernelDistance kernel_distance(const CircleKernel& a, const CircleKernel& b) {
  if (a.size() != b.size()) throw InvalidArgument("chain-limit", "kernels live on different grids");
  KernelDistance d;
  CompensatedSum l1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = std::abs(a.values()[k] - b.values()[k]);
    d.sup = std::max(d.sup, diff);
    l1.add(diff);
  }
  d.l1 = kTwoPi / static_cast<double>(a.size()) * l1.value();
  return d;
}

struct ChainHeatReport {
  int n = 0;
  double b = 0.0;
  double inverse_temperature = 0.0;  // B_n = n b
  double sup_distance = 0.0;
  double l1_distance = 0.0;
  double max_mass_error = 0.0;       // over step kernel, n-step kernel, heat kernel
};

/// Distance between the n-step XY chain kernel at B_n = n b and the wrapped
/// heat kernel at t = 1.
inline ChainHeatReport chain_vs_heat(int n, double b, int grid = 512) {
  if (n < 2) throw InvalidArgument("chain-limit", "chain_vs_heat needs n >= 2");
  if (!(b > 0.0)) throw InvalidArgument("chain-limit", "b must be > 0");
  ChainHeatReport r;
  r.n = n;
  r.b = b;
  r.inverse_temperature = n * b;
  const CircleKernel step = make_xy_kernel(r.inverse_temperature, grid);
  const CircleKernel chain = kernel_power(step, n);
  const CircleKernel heat = heat_kernel_circle(1.0, b, grid);
  const auto d = kernel_distance(chain, heat);
  r.sup_distance = d.sup;
  r.l1_distance = d.l1;
  for (const CircleKernel* k : {&step, &chain, &heat}) r.max_mass_error = std::max(r.max_mass_error, std::abs(k->mass() - 1.0));
  return r;
}

struct DirichletRatioReport {
  double ratio = 1.0;
  double limit_ratio = 1.0;
  double log_partition_first = 0.0;
  double log_partition_second = 0.0;
};

namespace detail {

// p_n(delta) = (1/2pi) sum_m c_m^n e^{i m delta}, trigonometric
// interpolation of the n-step density at an arbitrary angle.
inline double power_density_at(const std::vector<std::complex<double>>& c, int n, double delta) {
  const std::size_t size = c.size();
  const long half = static_cast<long>(size / 2);
  CompensatedSum acc;
  for (long m = -half + 1; m < half; ++m) {
    const std::complex<double> cm = c[static_cast<std::size_t>((m + static_cast<long>(size)) % static_cast<long>(size))];
    acc.add((std::pow(cm, n) * std::exp(std::complex<double>(0.0, static_cast<double>(m) * delta))).real());
  }
  acc.add((std::pow(c[static_cast<std::size_t>(half)], n)).real() * std::cos(static_cast<double>(half) * delta));
  return acc.value() / kTwoPi;
}

}  // namespace detail

/// Z(theta0, theta1) / Z(theta0', theta1') for the XY chain of n edges at
/// B_n = n b with both ends pinned, in log space, plus the wrapped-Gaussian
/// limit with increment variance 1/b.
inline DirichletRatioReport dirichlet_ratio(int n, double b, std::pair<double, double> first,
                                            std::pair<double, double> second, int grid = 512) {
  const std::string mod = "chain-limit";
  if (n < 1) throw InvalidArgument(mod, "dirichlet_ratio needs n >= 1");
  if (!(b > 0.0)) throw InvalidArgument(mod, "b must be > 0");
  for (double a : {first.first, first.second, second.first, second.second}) {
    if (!(a > -kPi && a <= kPi)) throw InvalidArgument(mod, "pinned angles must lie in (-pi, pi]");
  }
  const CircleKernel step = make_xy_kernel(n * b, grid);
  const auto c = detail::characteristic(step);
  const double da = first.second - first.first;
  const double db = second.second - second.first;
  const double pa = detail::power_density_at(c, n, da);
  const double pb = detail::power_density_at(c, n, db);
  if (!(pa > 0.0) || !(pb > 0.0)) {
    throw NumericalFailure(mod, "pinned-end partition function underflowed; increase the grid");
  }
  DirichletRatioReport r;
  r.log_partition_first = n * step.log_normalization() + std::log(pa);
  r.log_partition_second = n * step.log_normalization() + std::log(pb);
  r.ratio = pa / pb;
  r.limit_ratio = periodized_gaussian(da, b) / periodized_gaussian(db, b);
  return r;
}

/// e^B sqrt(2 pi / B) (1 + 1/(8B)), the Laplace approximation of
/// int e^{B cos phi} dphi.
inline double laplace_xy_normalization(double inverse_temperature) {
  const double bb = inverse_temperature;
  return std::exp(bb) * std::sqrt(kTwoPi / bb) * (1.0 + 1.0 / (8.0 * bb));
}

}  // namespace lypiz
