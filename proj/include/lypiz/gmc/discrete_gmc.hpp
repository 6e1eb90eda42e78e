#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "lypiz/distribution.hpp"
#include "lypiz/error.hpp"
#include "lypiz/gmc/lattice.hpp"
#include "lypiz/gmc/rng.hpp"
#include "lypiz/mgf.hpp"
#include "lypiz/numeric.hpp"
#include "lypiz/zeros.hpp"

namespace lypiz {

/// h = (beta * DGFF + phi) reduced to (-pi, pi], one angle per site of the
/// domain D_{nr}; boundary sites carry phi.
struct DiscreteGmcField {
  int n = 0;
  double r = 1.0;
  double beta = 0.0;
  double phi = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> h;
};

namespace detail {

inline void check_gmc_params(int n, double r, double beta) {
  if (n < 1) throw InvalidArgument("gmc", "n must be >= 1");
  if (!(r >= 1.0)) throw InvalidArgument("gmc", "r must be >= 1 so that D_n lies inside D_{nr}");
  if (!(beta > 0.0 && beta < std::sqrt(2.0))) throw InvalidArgument("gmc", "beta must lie in (0, sqrt 2)");
}

}  // namespace detail

/// Sites of D_n (|x| < n) inside the field domain D_{nr}.
inline std::vector<std::size_t> inner_disk_sites(const LatticeDomain& domain, int n) {
  std::vector<std::size_t> out;
  const double n2 = static_cast<double>(n) * n;
  for (std::size_t i = 0; i < domain.num_sites(); ++i) {
    const auto [x, y] = domain.site(i);
    if (static_cast<double>(x) * x + static_cast<double>(y) * y < n2) out.push_back(i);
  }
  return out;
}

/// lambda_{n,r}(x) = n^{-2} exp((beta^2 / 2) G(x, x)).
inline double gmc_lambda(int n, double beta, double green_diag) {
  return std::exp(0.5 * beta * beta * green_diag) / (static_cast<double>(n) * n);
}

/// Field from stream (seed, 0) for the DGFF and (seed, 1) for the phase.
/// With `random_phase` false, phi is `fixed_phase`.
inline DiscreteGmcField make_gmc_field(const LatticeDomain& domain, int n, double r, double beta, std::uint64_t seed,
                                       bool random_phase = true, double fixed_phase = 0.0,
                                       std::size_t max_sites = kDefaultDgffSiteCap) {
  detail::check_gmc_params(n, r, beta);
  DiscreteGmcField f{n, r, beta, fixed_phase, seed, {}};
  if (random_phase) {
    Rng prng = make_stream(seed, 1);
    f.phi = wrap_angle(-kPi + kTwoPi * uniform01(prng));
  }
  Rng rng = make_stream(seed, 0);
  const auto phi_field = DgffSampler(domain, max_sites).sample(rng, 0.0);
  f.h.resize(phi_field.size());
  for (std::size_t i = 0; i < phi_field.size(); ++i) f.h[i] = wrap_angle(beta * phi_field[i] + f.phi);
  return f;
}

/// Complex sum sum_{x in D_n} lambda(x) e^{i h(x)}; its real part is M_{n,r}.
inline std::complex<double> m_hat(const LatticeDomain& domain, const DiscreteGmcField& field) {
  detail::check_gmc_params(field.n, field.r, field.beta);
  if (field.h.size() != domain.num_sites()) throw InvalidArgument("gmc", "field does not match the lattice domain");
  CompensatedComplexSum acc;
  for (std::size_t i : inner_disk_sites(domain, field.n)) {
    const double g = domain.green_or_zero(i, i);
    acc.add(gmc_lambda(field.n, field.beta, g) * std::polar(1.0, field.h[i]));
  }
  return acc.value();
}

inline double m_statistic(const LatticeDomain& domain, const DiscreteGmcField& field) {
  return m_hat(domain, field).real();
}

struct GmcSampleOptions {
  bool random_phase = true;
  int threads = 0;
  std::size_t max_sites = kDefaultDgffSiteCap;
};

/// `count` independent values of M-hat; sample i uses master stream i.
inline std::vector<std::complex<double>> sample_m_hat(const LatticeDomain& domain, int n, double r, double beta,
                                                      std::size_t count, std::uint64_t seed, GmcSampleOptions opts = {}) {
  detail::check_gmc_params(n, r, beta);
  const DgffSampler sampler(domain, opts.max_sites);
  const auto sites = inner_disk_sites(domain, n);
  std::vector<double> lambda(domain.num_sites(), 0.0);
  for (std::size_t i : sites) lambda[i] = gmc_lambda(n, beta, domain.green_or_zero(i, i));
  std::vector<std::complex<double>> out(count);
  parallel_for(count, resolve_threads(opts.threads), [&](std::size_t s) {
    const std::uint64_t sub = stream_seed(seed, s);
    Rng prng = make_stream(sub, 1);
    const double phi = opts.random_phase ? wrap_angle(-kPi + kTwoPi * uniform01(prng)) : 0.0;
    Rng rng = make_stream(sub, 0);
    const auto field = sampler.sample(rng, 0.0);
    CompensatedComplexSum acc;
    for (std::size_t i : sites) acc.add(lambda[i] * std::polar(1.0, wrap_angle(beta * field[i] + phi)));
    out[s] = acc.value();
  });
  return out;
}

struct FormulaMoment {
  std::complex<double> value;
  double std_error = 0.0;  // zero when exact
  bool exact = true;
  std::size_t sites = 0;
};

struct FormulaOptions {
  double budget = 1e8;          // largest |D_n|^k for exact summation
  std::uint64_t tuples = 1'000'000;  // Monte Carlo tuples for k = 3, 4
  std::uint64_t seed = 0;
  int threads = 0;
};

/// E[M-hat^k] with Phi = 0:
///   n^{-2k} sum_{x_1..x_k} exp((beta^2/2) sum_i G(x_i,x_i))
///                         * exp(-(beta^2/2) [sum_i G(x_i,x_i) + sum_{i != j} G(x_i,x_j)]).
/// The two exponentials are evaluated separately so that the cancellation of
/// the diagonal is a genuine numerical check.
inline FormulaMoment gmc_moment_formula(const LatticeDomain& domain, int n, double beta, int k, FormulaOptions opts = {}) {
  const std::string mod = "gmc";
  detail::check_gmc_params(n, 1.0, beta);
  if (k < 1 || k > 4) throw InvalidArgument(mod, "moment order k must lie in [1, 4]");
  const auto sites = inner_disk_sites(domain, n);
  const std::size_t m = sites.size();
  const double cost = std::pow(static_cast<double>(m), k);
  const bool exact = cost <= opts.budget;
  if (!exact && k <= 2) {
    throw InvalidArgument(mod, "exact moment needs |D_n|^k = " + std::to_string(cost) + " terms, above budget " +
                                   std::to_string(opts.budget));
  }
  const double half_b2 = 0.5 * beta * beta;
  const double norm = std::pow(static_cast<double>(n), -2.0 * k);

  Eigen::MatrixXd g;
  if (k == 1) {
    g.resize(static_cast<Eigen::Index>(m), 1);
    for (std::size_t a = 0; a < m; ++a) g(static_cast<Eigen::Index>(a), 0) = domain.green_or_zero(sites[a], sites[a]);
  } else {
    const Eigen::MatrixXd full = domain.green_matrix(opts.threads);
    g.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t a = 0; a < m; ++a) {
      const long pa = domain.interior_position(sites[a]);
      for (std::size_t b = 0; b < m; ++b) {
        const long pb = domain.interior_position(sites[b]);
        g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = (pa < 0 || pb < 0) ? 0.0 : full(pa, pb);
      }
    }
  }
  auto diag = [&](std::size_t a) { return k == 1 ? g(static_cast<Eigen::Index>(a), 0) : g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)); };
  auto term = [&](const std::vector<std::size_t>& t) {
    double normalizer = 0.0;
    double cov = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      normalizer += diag(t[i]);
      for (std::size_t j = 0; j < t.size(); ++j) {
        cov += i == j ? diag(t[i]) : g(static_cast<Eigen::Index>(t[i]), static_cast<Eigen::Index>(t[j]));
      }
    }
    return std::exp(half_b2 * normalizer) * std::exp(-half_b2 * cov);
  };

  FormulaMoment out;
  out.sites = m;
  out.exact = exact;
  if (exact) {
    CompensatedSum acc;
    std::vector<std::size_t> t(static_cast<std::size_t>(k), 0);
    while (true) {
      acc.add(term(t));
      std::size_t pos = 0;
      while (pos < t.size() && ++t[pos] == m) t[pos++] = 0;
      if (pos == t.size()) break;
    }
    out.value = norm * acc.value();
    return out;
  }
  const std::size_t chunks = 64;
  std::vector<std::pair<double, double>> part(chunks);
  parallel_for(chunks, resolve_threads(opts.threads), [&](std::size_t c) {
    Rng rng = make_stream(opts.seed, c);
    const std::uint64_t lo = opts.tuples * c / chunks;
    const std::uint64_t hi = opts.tuples * (c + 1) / chunks;
    std::vector<std::size_t> t(static_cast<std::size_t>(k));
    CompensatedSum s1;
    CompensatedSum s2;
    for (std::uint64_t s = lo; s < hi; ++s) {
      for (auto& x : t) x = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(m));
      const double v = term(t);
      s1.add(v);
      s2.add(v * v);
    }
    part[c] = {s1.value(), s2.value()};
  });
  CompensatedSum s1;
  CompensatedSum s2;
  for (const auto& [a, b] : part) {
    s1.add(a);
    s2.add(b);
  }
  const double count = static_cast<double>(opts.tuples);
  const double mean = s1.value() / count;
  const double var = std::max(0.0, s2.value() / count - mean * mean);
  const double scale = norm * cost;
  out.value = scale * mean;
  out.std_error = scale * std::sqrt(var / count);
  return out;
}

/// Symmetric histogram law: 2B+1 bins of width h centred at j h, j = -B..B,
/// with h = max|s| / (B + 1/2); the result is symmetrised.
inline DiscretizedDistribution empirical_distribution(const std::vector<double>& samples, int half_bins = 200) {
  if (samples.empty()) throw InvalidArgument("gmc", "empirical distribution of an empty sample");
  if (half_bins < 1) throw InvalidArgument("gmc", "need at least one half-bin");
  double max_abs = 0.0;
  for (double s : samples) {
    if (!std::isfinite(s)) throw InvalidArgument("gmc", "non-finite sample");
    max_abs = std::max(max_abs, std::abs(s));
  }
  if (max_abs == 0.0) return DiscretizedDistribution::point_mass(0.0);
  const double h = max_abs / (half_bins + 0.5);
  std::vector<double> counts(static_cast<std::size_t>(2 * half_bins + 1), 0.0);
  for (double s : samples) {
    long j = std::lround(s / h);
    j = std::clamp<long>(j, -half_bins, half_bins);
    counts[static_cast<std::size_t>(j + half_bins)] += 1.0;
  }
  std::vector<Atom> atoms;
  for (int j = -half_bins; j <= half_bins; ++j) {
    const double c = counts[static_cast<std::size_t>(j + half_bins)];
    if (c > 0.0) atoms.push_back(Atom{j * h, c / static_cast<double>(samples.size())});
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms), 0, true);
}

/// Zero report of the empirical MGF with bootstrap spreads. Exploratory:
/// evidence at finite sample size, not a certificate.
struct ExploratoryZeroReport {
  ZeroReport report;
  std::vector<double> zero_spread;  // bootstrap SD of the matched zero location
  int resamples = 0;
  int resamples_with_zeros = 0;
  bool exploratory = true;
};

inline ExploratoryZeroReport bootstrap_zero_report(const std::vector<double>& samples, const Rect& region,
                                                   std::uint64_t seed, int resamples = 200, int half_bins = 200,
                                                   double tol = 1e-8, LocateOptions lopts = {}) {
  ExploratoryZeroReport out;
  out.report = locate_zeros(EntireMGF(empirical_distribution(samples, half_bins)), region, tol, lopts);
  out.resamples = resamples;
  const std::size_t nz = out.report.zeros.size();
  std::vector<CompensatedSum> sq(nz);
  std::vector<int> hits(nz, 0);
  Rng rng = make_stream(seed, 0);
  std::vector<double> resample(samples.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& s : resample) s = samples[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(samples.size()))];
    ZeroReport rep;
    try {
      rep = locate_zeros(EntireMGF(empirical_distribution(resample, half_bins)), region, tol, lopts);
    } catch (const NumericalFailure&) {
      continue;
    }
    if (rep.zeros.empty()) continue;
    ++out.resamples_with_zeros;
    for (std::size_t i = 0; i < nz; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& z : rep.zeros) best = std::min(best, std::abs(z.location - out.report.zeros[i].location));
      sq[i].add(best * best);
      ++hits[i];
    }
  }
  out.zero_spread.resize(nz);
  for (std::size_t i = 0; i < nz; ++i) {
    out.zero_spread[i] = hits[i] > 0 ? std::sqrt(sq[i].value() / hits[i]) : std::numeric_limits<double>::infinity();
  }
  return out;
}

/// Snapshot layout (little-endian host order): 8-byte magic "LYPZGMC1",
/// int64 n, float64 r, float64 beta, float64 phi, uint64 seed, uint64 count,
/// then `count` float64 angles in site order (row-major over y, then x).
inline void write_field_snapshot(const std::string& path, const DiscreteGmcField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("gmc", "cannot open snapshot file '" + path + "'");
  const char magic[8] = {'L', 'Y', 'P', 'Z', 'G', 'M', 'C', '1'};
  os.write(magic, 8);
  const std::int64_t n = f.n;
  const std::uint64_t count = f.h.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(&f.r), sizeof f.r);
  os.write(reinterpret_cast<const char*>(&f.beta), sizeof f.beta);
  os.write(reinterpret_cast<const char*>(&f.phi), sizeof f.phi);
  os.write(reinterpret_cast<const char*>(&f.seed), sizeof f.seed);
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  os.write(reinterpret_cast<const char*>(f.h.data()), static_cast<std::streamsize>(count * sizeof(double)));
}

inline DiscreteGmcField read_field_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidArgument("gmc", "cannot open snapshot file '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "LYPZGMC1") throw InvalidArgument("gmc", "'" + path + "' is not a field snapshot");
  DiscreteGmcField f;
  std::int64_t n = 0;
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  is.read(reinterpret_cast<char*>(&f.r), sizeof f.r);
  is.read(reinterpret_cast<char*>(&f.beta), sizeof f.beta);
  is.read(reinterpret_cast<char*>(&f.phi), sizeof f.phi);
  is.read(reinterpret_cast<char*>(&f.seed), sizeof f.seed);
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!is || count > (std::uint64_t{1} << 32)) throw InvalidArgument("gmc", "truncated snapshot header in '" + path + "'");
  f.n = static_cast<int>(n);
  f.h.resize(count);
  is.read(reinterpret_cast<char*>(f.h.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw InvalidArgument("gmc", "truncated snapshot body in '" + path + "'");
  return f;
}

}  // namespace lypiz
