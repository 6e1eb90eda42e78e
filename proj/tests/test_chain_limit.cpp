#include <gtest/gtest.h>

#include <cmath>

#include "lypiz/chain_limit.hpp"

using namespace lypiz;

namespace {

double bessel_i0_series(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 400; ++k) {
    term *= (x * x / 4.0) / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Villain step density on the grid; n-fold convolution of wrapped Gaussians is exact.
CircleKernel villain_step(double j, int grid) {
  std::vector<double> v(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k) v[static_cast<std::size_t>(k)] = heat_kernel_density(-kPi + kTwoPi * k / grid, 1.0, j);
  return CircleKernel(std::move(v), 0.0);
}

}  // namespace

TEST(XyKernel, UnitMassAndBesselNormalization) {
  for (double b : {0.5, 1.0, 5.0}) {
    const auto k = make_xy_kernel(b, 256);
    EXPECT_NEAR(k.mass(), 1.0, 1e-12);
    EXPECT_NEAR(k.normalization() / (kTwoPi * bessel_i0_series(b)), 1.0, 1e-10) << b;
    EXPECT_GT(k.min_value(), 0.0);
  }
}

TEST(XyKernel, LaplaceErrorHasExpectedOrder) {
  for (double b : {20.0, 40.0, 80.0}) {
    const double exact = kTwoPi * bessel_i0_series(b);
    const double rel = std::abs(laplace_xy_normalization(b) / exact - 1.0);
    EXPECT_NEAR(rel / (9.0 / (128.0 * b * b)), 1.0, 0.2) << b;
  }
}

TEST(XyKernel, Rejections) {
  EXPECT_THROW(make_xy_kernel(1.0, 7), InvalidArgument);
  EXPECT_THROW(make_xy_kernel(-1.0, 8), InvalidArgument);
  EXPECT_THROW(kernel_power(make_xy_kernel(1.0, 8), 0), InvalidArgument);
}

TEST(KernelPower, MatchesDirectConvolution) {
  const int grid = 64;
  const auto k = make_xy_kernel(3.0, grid);
  const auto k3 = kernel_power(k, 3);
  const double h = kTwoPi / grid;
  std::vector<double> cur = k.values();
  for (int step = 1; step < 3; ++step) {
    std::vector<double> next(grid, 0.0);
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        // angle(i) - angle(j) wraps to index i - j + grid/2
        const int d = ((i - j + grid / 2) % grid + grid) % grid;
        next[i] += h * cur[j] * k.values()[d];
      }
    }
    cur = next;
  }
  for (int i = 0; i < grid; ++i) EXPECT_NEAR(k3.values()[i], cur[i], 1e-12);
  EXPECT_NEAR(k3.mass(), 1.0, 1e-12);
}

TEST(HeatKernel, UnitMass) {
  EXPECT_NEAR(heat_kernel_circle(1.0, 2.0, 512).mass(), 1.0, 1e-14);
  EXPECT_THROW(heat_kernel_circle(0.0, 2.0, 512), InvalidArgument);
}

TEST(ChainVsHeat, DistanceShrinksWithN) {
  double prev = 1e300;
  for (int n : {4, 16, 64, 256}) {
    const auto r = chain_vs_heat(n, 2.0);
    EXPECT_LT(r.max_mass_error, 1e-10);
    EXPECT_DOUBLE_EQ(r.inverse_temperature, 2.0 * n);
    EXPECT_LT(r.sup_distance, prev);
    prev = r.sup_distance;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(ChainVsHeat, VillainChainIsExactlyHeat) {
  const int grid = 256;
  for (int n : {2, 8}) {
    const auto chain = kernel_power(villain_step(2.0 * n, grid), n);
    EXPECT_LT(kernel_distance(chain, heat_kernel_circle(1.0, 2.0, grid)).sup, 1e-10);
  }
}

TEST(DirichletRatio, Identities) {
  const auto same = dirichlet_ratio(8, 1.5, {0.1, 0.9}, {0.1, 0.9});
  EXPECT_DOUBLE_EQ(same.ratio, 1.0);
  const auto ab = dirichlet_ratio(8, 1.5, {0.0, 0.5}, {0.2, 2.0});
  const auto ba = dirichlet_ratio(8, 1.5, {0.2, 2.0}, {0.0, 0.5});
  EXPECT_NEAR(ab.ratio * ba.ratio, 1.0, 1e-12);
  // only the difference of the end angles matters
  const auto shifted = dirichlet_ratio(8, 1.5, {0.3, 0.8}, {0.2, 2.0});
  EXPECT_NEAR(shifted.ratio / ab.ratio, 1.0, 1e-10);
  EXPECT_NEAR(std::log(ab.ratio), ab.log_partition_first - ab.log_partition_second, 1e-10);
}

TEST(DirichletRatio, ConvergesToWrappedGaussianRatio) {
  // first-order convergence: quadrupling n quarters the error
  double prev = 0.0;
  for (int n : {16, 64, 256}) {
    const auto r = dirichlet_ratio(n, 1.0, {0.0, 0.5}, {0.0, 2.5});
    const double err = std::abs(r.ratio / r.limit_ratio - 1.0);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.1);
    }
    prev = err;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(DirichletRatio, Rejections) {
  EXPECT_THROW(dirichlet_ratio(0, 1.0, {0, 0}, {0, 0}), InvalidArgument);
  EXPECT_THROW(dirichlet_ratio(2, 1.0, {0, 4.0}, {0, 0}), InvalidArgument);
  EXPECT_THROW(dirichlet_ratio(2, 0.0, {0, 0}, {0, 0}), InvalidArgument);
}
