#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "lypiz/graph.hpp"
#include "lypiz/mgf.hpp"
#include "lypiz/spin_gibbs.hpp"

using namespace lypiz;

namespace {

// I_0(x) = sum_k (x/2)^{2k} / (k!)^2
double bessel_i0_series(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= (x * x / 4.0) / (static_cast<double>(k) * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Poisson summation: (1/sqrt(2 pi J)) sum_k e^{-k^2/(2J)} e^{i k theta}
double periodized_gaussian_poisson(double theta, double j) {
  double sum = 1.0;
  for (int k = 1; k < 2000; ++k) sum += 2.0 * std::exp(-k * k / (2.0 * j)) * std::cos(k * theta);
  return sum / std::sqrt(2.0 * kPi * j);
}

ModelSpec edge_model(ModelKind kind, double j, double beta, double l0 = 1.0, double l1 = 1.0) {
  return ModelSpec{kind, build_graph({"x", "y"}, {{"x", "y"}}, {j}, {l0, l1}), beta, {}};
}

Complex mgf(const DiscretizedDistribution& d, Complex z) { return EntireMGF(d)(z); }

}  // namespace

TEST(PeriodizedGaussian, DominantTermAtLargeCoupling) { EXPECT_NEAR(periodized_gaussian(0.0, 50.0), 1.0, 1e-12); }

TEST(PeriodizedGaussian, FlatAtSmallCouplingMatchesPoisson) {
  for (double th : {-3.0, -1.0, 0.0, 0.7, 2.5, kPi}) {
    const double v = periodized_gaussian(th, 0.01);
    EXPECT_NEAR(v, 1.0 / std::sqrt(2.0 * kPi * 0.01), 1e-6);
    EXPECT_NEAR(v, periodized_gaussian_poisson(th, 0.01), 1e-12 * v);
  }
}

TEST(PeriodizedGaussian, MatchesPoissonAcrossCouplings) {
  for (double j : {0.3, 1.0, 2.0, 5.0}) {
    for (double th : {-2.9, -0.4, 0.0, 1.3, 3.1}) {
      const double v = periodized_gaussian(th, j);
      EXPECT_NEAR(v, periodized_gaussian_poisson(th, j), 1e-13 * std::max(1.0, v)) << j << " " << th;
    }
  }
}

TEST(PeriodizedGaussian, Periodic) {
  EXPECT_EQ(periodized_gaussian(0.3 + kTwoPi, 1.0), periodized_gaussian(0.3, 1.0));
}

TEST(PeriodizedGaussian, RejectsBadArguments) {
  EXPECT_THROW(periodized_gaussian(0.0, 0.0), InvalidArgument);
  EXPECT_THROW(periodized_gaussian(0.0, -1.0), InvalidArgument);
  EXPECT_THROW(periodized_gaussian(0.0, 1.0, 1.5), InvalidArgument);
}

TEST(XyEdgeWeight, Values) {
  EXPECT_DOUBLE_EQ(xy_edge_weight(0.0, 2.0), std::exp(2.0));
  EXPECT_NEAR(xy_edge_weight(kPi, 2.0), std::exp(-2.0), 1e-15);
}

TEST(XyEdgeWeight, IntegralIsBesselNormalization) {
  const int n = 256;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += xy_edge_weight(-kPi + kTwoPi * k / n, 1.0);
  s *= kTwoPi / n;
  EXPECT_NEAR(s, kTwoPi * bessel_i0_series(1.0), 1e-12);
  EXPECT_NEAR(s, 7.95493, 1e-5);
}

TEST(ObservableDistribution, SingleVertexIsBessel) {
  const ModelSpec m{ModelKind::XY, build_graph({"v"}, {}, {}, {1.0}), 1.0, {}};
  const auto d = observable_distribution(m, 256);
  EXPECT_NEAR(mgf(d, 1.0).real(), bessel_i0_series(1.0), 1e-10);
  EXPECT_NEAR(mgf(d, 1.0).real(), 1.2660658, 1e-7);
}

TEST(ObservableDistribution, ZeroWeightsGivePointMass) {
  const auto d = observable_distribution(edge_model(ModelKind::Villain, 1.0, 1.0, 0.0, 0.0), 32);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.atoms()[0].x, 0.0);
  EXPECT_DOUBLE_EQ(d.atoms()[0].w, 1.0);
}

TEST(ObservableDistribution, VillainEdgeSpectralConvergence) {
  const auto a = observable_distribution(edge_model(ModelKind::Villain, 2.0, 1.0), 128);
  const auto b = observable_distribution(edge_model(ModelKind::Villain, 2.0, 1.0), 256);
  EXPECT_NEAR(std::abs(mgf(a, 1.0) - mgf(b, 1.0)), 0.0, 1e-10);
}

TEST(ObservableDistribution, DoublingGridStableOnDisk) {
  for (auto kind : {ModelKind::XY, ModelKind::Villain}) {
    const auto a = observable_distribution(edge_model(kind, 1.0, 1.0), 64);
    const auto b = observable_distribution(edge_model(kind, 1.0, 1.0), 128);
    for (Complex z : {Complex(2.0, 0.0), Complex(0.0, 2.0), Complex(1.2, 1.2), Complex(-1.0, 0.5)}) {
      EXPECT_LT(std::abs(mgf(a, z) - mgf(b, z)), 1e-8);
    }
  }
}

TEST(ObservableDistribution, BruteForceOracle) {
  // Direct enumeration of a 3-vertex path on a coarse grid.
  const int n = 6;
  const auto g = build_graph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}, {0.7, 1.3}, {1.0, 0.5, 0.25});
  const ModelSpec m{ModelKind::XY, g, 1.4, {}};
  const auto d = observable_distribution(m, n);
  std::map<long long, double> oracle;
  double total = 0.0;
  auto th = [&](int k) { return -kPi + kTwoPi * k / n; };
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        const double w = std::exp(1.4 * (0.7 * std::cos(th(a) - th(b)) + 1.3 * std::cos(th(b) - th(c))));
        const double x = std::cos(th(a)) + 0.5 * std::cos(th(b)) + 0.25 * std::cos(th(c));
        oracle[std::llround(x * 1e9)] += w;
        total += w;
      }
    }
  }
  for (Complex z : {Complex(0.5, 0.0), Complex(1.0, 1.0), Complex(-0.3, 2.0)}) {
    Complex expect = 0.0;
    for (const auto& [key, w] : oracle) expect += w / total * std::exp(z * (static_cast<double>(key) * 1e-9));
    EXPECT_NEAR(std::abs(mgf(d, z) - expect), 0.0, 1e-8);
  }
}

TEST(ObservableDistribution, SymmetricAndNormalized) {
  const auto g = build_graph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}, {0.5, 2.0}, {0.5, 1.0, 1.0});
  for (auto kind : {ModelKind::XY, ModelKind::Villain}) {
    const auto d = observable_distribution(ModelSpec{kind, g, 1.0, {}}, 16);
    EXPECT_NEAR(d.total_weight(), 1.0, 1e-12);
    const auto& at = d.atoms();
    for (std::size_t i = 0; i < at.size(); ++i) {
      EXPECT_EQ(at[i].x, -at[at.size() - 1 - i].x);
      EXPECT_EQ(at[i].w, at[at.size() - 1 - i].w);
    }
  }
}

TEST(ObservableDistribution, Rejections) {
  const auto m = edge_model(ModelKind::XY, 1.0, 1.0);
  EXPECT_THROW(observable_distribution(m, 7), InvalidArgument);
  QuadratureOptions tiny;
  tiny.budget = 100;
  try {
    observable_distribution(m, 64, tiny);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("64^2"), std::string::npos);
  }
  ModelSpec pinned = m;
  pinned.pinned["nope"] = 0.0;
  EXPECT_THROW(observable_distribution(pinned, 16), InvalidArgument);
  pinned.pinned.clear();
  pinned.pinned["x"] = 4.0;
  EXPECT_THROW(observable_distribution(pinned, 16), InvalidArgument);
}

TEST(ObservableDistribution, PinnedVertexActsAsField) {
  ModelSpec m = edge_model(ModelKind::XY, 1.0, 1.5, 0.0, 1.0);
  m.pinned["x"] = 0.0;
  const auto d = observable_distribution(m, 128);
  // Law of cos(theta_y) under density e^{1.5 cos theta}: mean I_1(1.5)/I_0(1.5).
  const double i0 = bessel_i0_series(1.5);
  double i1 = 0.0;
  double term = 0.75;
  i1 = term;
  for (int k = 1; k < 100; ++k) {
    term *= (1.5 * 1.5 / 4.0) / (static_cast<double>(k) * (k + 1));
    i1 += term;
  }
  EXPECT_NEAR(d.mean(), i1 / i0, 1e-12);
}

TEST(TransferChain, OneStepMatchesTensor) {
  for (double beta : {0.5, 2.0}) {
    const auto a = transfer_chain_distribution(1, beta, {1.0, 0.5}, 64);
    const auto b = observable_distribution(edge_model(ModelKind::XY, 1.0, beta, 1.0, 0.5), 64);
    for (Complex z : {Complex(0.5, 0.0), Complex(1.0, 1.0)}) EXPECT_NEAR(std::abs(mgf(a, z) - mgf(b, z)), 0.0, 1e-10);
  }
}

TEST(TransferChain, MatchesTensorOnShortChain) {
  const auto g = build_graph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}, {1.0, 1.0}, {1.0, 0.0, 1.0});
  const auto a = transfer_chain_distribution(2, 1.3, {1.0, 1.0}, 32);
  const auto b = observable_distribution(ModelSpec{ModelKind::XY, g, 1.3, {}}, 32);
  for (Complex z : {Complex(0.5, 0.0), Complex(1.0, 1.0)}) EXPECT_NEAR(std::abs(mgf(a, z) - mgf(b, z)), 0.0, 1e-12);
}

TEST(TransferChain, ZeroEndsGivePointMass) {
  const auto d = transfer_chain_distribution(5, 1.0, {0.0, 0.0}, 32);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.atoms()[0].x, 0.0);
}

TEST(TransferChain, SpectralStability) {
  const auto a = transfer_chain_distribution(3, 2.0, {1.0, 1.0}, 128);
  const auto b = transfer_chain_distribution(3, 2.0, {1.0, 1.0}, 256);
  EXPECT_LT(std::abs(mgf(a, 1.0) - mgf(b, 1.0)), 1e-9);
}
