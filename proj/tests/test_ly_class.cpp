#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "lypiz/ly_class.hpp"
#include "lypiz/spin_gibbs.hpp"

using namespace lypiz;

namespace {

DiscretizedDistribution three_atom() {
  return DiscretizedDistribution::from_atoms({{-2.0, 0.1}, {0.0, 0.8}, {2.0, 0.1}});
}

std::vector<double> model_moments(double s, double c, int kmax) {
  std::vector<double> m;
  for (int k = 1; k <= kmax; ++k) m.push_back(std::exp(s * k * std::log(k) + c * k));
  return m;
}

// (2k-1)!! for k = 1..kmax
std::vector<double> gaussian_moments(int kmax) {
  std::vector<double> m;
  double v = 1.0;
  for (int k = 1; k <= kmax; ++k) {
    v *= 2.0 * k - 1.0;
    m.push_back(v);
  }
  return m;
}

TailProfile slow_profile(double a) {
  TailProfile t;
  t.exponent_a = a;
  t.coefficient = 1.0;
  t.fit_residual = 0.01;
  return t;
}

}  // namespace

TEST(CheckSymmetry, Examples) {
  EXPECT_TRUE(check_symmetry(rademacher()));
  EXPECT_FALSE(check_symmetry(DiscretizedDistribution::from_atoms({{-1.0, 0.4}, {1.0, 0.6}})));
  const auto g = build_graph({"a", "b"}, {{"a", "b"}}, {0.8}, {1.0, 0.3});
  EXPECT_TRUE(check_symmetry(observable_distribution(ModelSpec{ModelKind::Villain, g, 1.0, {}}, 32)));
}

TEST(CheckSymmetryProperty, InvariantUnderPermutation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Atom> atoms;
    for (int j = 0; j < 6; ++j) {
      const double x = u(rng);
      const double w = u(rng);
      atoms.push_back({x, w});
      atoms.push_back({-x, w});
    }
    const bool a = check_symmetry(DiscretizedDistribution::from_atoms(atoms));
    std::shuffle(atoms.begin(), atoms.end(), rng);
    const bool b = check_symmetry(DiscretizedDistribution::from_atoms(atoms));
    EXPECT_TRUE(a);
    EXPECT_EQ(a, b);
  }
}

TEST(TailExponent, RecoversOwnModel) {
  const auto m = model_moments(1.5, 0.3, 10);
  const auto p = tail_exponent_from_moments(m);
  EXPECT_NEAR(p.slope, 1.5, 1e-9);
  EXPECT_NEAR(p.linear, 0.3, 1e-9);
  EXPECT_NEAR(p.exponent_a, 4.0 / 3.0, 1e-9);
  EXPECT_LT(p.fit_residual, 1e-9);
}

TEST(TailExponent, GaussianMomentsSlopeTendsToOne) {
  const double s20 = tail_exponent_from_moments(gaussian_moments(20)).slope;
  const double s80 = tail_exponent_from_moments(gaussian_moments(80)).slope;
  EXPECT_LT(std::abs(s80 - 1.0), std::abs(s20 - 1.0));
  EXPECT_NEAR(s80, 1.0, 0.02);
  EXPECT_NEAR(tail_exponent_from_moments(gaussian_moments(80)).exponent_a, 2.0, 0.04);
}

TEST(TailExponent, FromTailProbabilities) {
  std::vector<std::pair<double, double>> tail;
  for (double t = 1.0; t <= 6.0; t += 0.5) tail.emplace_back(t, std::exp(-0.7 * std::pow(t, 1.4)));
  const auto p = tail_exponent_from_tail(tail);
  EXPECT_NEAR(p.exponent_a, 1.4, 1e-12);
  EXPECT_NEAR(p.coefficient, 0.7, 1e-12);
}

TEST(TailExponent, Rejections) {
  EXPECT_THROW(tail_exponent_from_moments(std::vector<double>{1, 2, 3}), InvalidArgument);
  EXPECT_THROW(tail_exponent_from_moments(std::vector<double>{1, 2, -3, 4}), InvalidArgument);
  EXPECT_THROW(tail_exponent_from_moments(std::vector<double>{1, 3, 2, 4}), InvalidArgument);
}

TEST(TailExponent, GmcPrediction) { EXPECT_NEAR(gmc_tail_exponent(1.44), 1.3889, 1e-4); }

TEST(Classify, RademacherConsistent) {
  const auto d = rademacher();
  ClassifyInput in;
  in.distribution = d;
  in.zeros = locate_zeros(EntireMGF(d), Rect{-2, 2, 0, 8});
  const auto v = classify(in);
  EXPECT_EQ(v.verdict, LyVerdict::ConsistentWithL);
  EXPECT_EQ(v.subgaussian, SubGaussian::Yes);
  EXPECT_STREQ(to_string(v.verdict), "consistent-with-L");
}

TEST(Classify, SlowTailExcluded) {
  ClassifyInput in;
  in.tail = slow_profile(4.0 / 3.0);
  const auto v = classify(in);
  EXPECT_EQ(v.verdict, LyVerdict::ExcludedBySlowtail);
  EXPECT_EQ(v.subgaussian, SubGaussian::No);
}

TEST(Classify, ThreeAtomExcludedByZero) {
  const auto d = three_atom();
  ClassifyInput in;
  in.distribution = d;
  in.zeros = locate_zeros(EntireMGF(d), Rect{-2, 2, 0, 2});
  EXPECT_EQ(classify(in).verdict, LyVerdict::ExcludedByOffAxisZero);
}

TEST(Classify, PoissonGuardAndNoisyFitsStayUndetermined) {
  ClassifyInput in;
  in.tail = slow_profile(1.03);
  EXPECT_EQ(classify(in).verdict, LyVerdict::Undetermined);
  auto noisy = slow_profile(1.5);
  noisy.fit_residual = 0.2;
  in.tail = noisy;
  EXPECT_EQ(classify(in).verdict, LyVerdict::Undetermined);
}

TEST(Classify, TensionFlaggedNotResolved) {
  const auto d = rademacher();
  ClassifyInput in;
  in.tail = slow_profile(1.5);
  in.zeros = locate_zeros(EntireMGF(d), Rect{-2, 2, 0, 8});
  const auto v = classify(in);
  EXPECT_EQ(v.verdict, LyVerdict::ExcludedBySlowtail);
  EXPECT_TRUE(v.numerical_tension);
}

TEST(ClassifyProperty, OffAxisZeroNeverConsistent) {
  const auto off = locate_zeros(EntireMGF(three_atom()), Rect{-2, 2, 0, 2});
  for (const auto& d : {rademacher(), discretized_gaussian(1.0), three_atom()}) {
    for (bool with_tail : {false, true}) {
      ClassifyInput in;
      in.distribution = d;
      in.zeros = off;
      if (with_tail) in.tail = slow_profile(2.0);
      EXPECT_NE(classify(in).verdict, LyVerdict::ConsistentWithL);
    }
  }
}

TEST(WeakLimit, GaussianFamilyConsistent) {
  std::vector<DiscretizedDistribution> seq;
  for (int n : {2, 4, 8, 16}) seq.push_back(discretized_gaussian(std::sqrt(1.0 - 1.0 / n)));
  const auto rep = weak_limit_harness(seq, discretized_gaussian(1.0), Rect{-2, 2, 0, 6});
  EXPECT_TRUE(rep.all_piz);
  EXPECT_TRUE(rep.distances_to_limit_nonincreasing);
  EXPECT_TRUE(rep.variance_bounded);
  EXPECT_TRUE(rep.consistent_with_weak_limit);
  EXPECT_FALSE(rep.corollary_seq_triggered);
  ASSERT_TRUE(rep.limit_verdict.has_value());
  EXPECT_EQ(rep.limit_verdict->verdict, LyVerdict::ConsistentWithL);
}

TEST(WeakLimit, ScaledRademacherZerosDrift) {
  std::vector<DiscretizedDistribution> seq;
  const std::vector<int> ns = {4, 8, 16, 32, 64};
  for (int n : ns) seq.push_back(rademacher(1.0 + 1.0 / n));
  const auto rep = weak_limit_harness(seq, rademacher(), Rect{-2, 2, 0, 8});
  EXPECT_TRUE(rep.consistent_with_weak_limit);
  double prev = 1e300;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto& zs = rep.entries[i].zeros.zeros;
    ASSERT_FALSE(zs.empty());
    const double scale = 1.0 + 1.0 / ns[i];
    EXPECT_NEAR(std::abs(zs[0].location - Complex(0.0, kPi / 2 / scale)), 0.0, 1e-10);
    const double dist = std::abs(zs[0].location - Complex(0.0, kPi / 2));
    EXPECT_LT(dist, prev);
    prev = dist;
  }
}

TEST(WeakLimit, SlowTailLimitTriggersCorollary) {
  std::vector<DiscretizedDistribution> seq = {rademacher(1.0), rademacher(1.1), rademacher(1.2)};
  const auto rep = weak_limit_harness(seq, slow_profile(gmc_tail_exponent(1.44)), Rect{-2, 2, 0, 4});
  EXPECT_TRUE(rep.corollary_seq_triggered);
  EXPECT_TRUE(rep.corollary_seq_contradiction);
  EXPECT_EQ(rep.limit_verdict->verdict, LyVerdict::ExcludedBySlowtail);
}

TEST(WeakLimit, NeedsThreeLaws) {
  EXPECT_THROW(weak_limit_harness({rademacher(), rademacher()}, rademacher(), Rect{-1, 1, 0, 1}), InvalidArgument);
}
