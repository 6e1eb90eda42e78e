#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lypiz/error.hpp"
#include "lypiz/gmc/rng.hpp"

namespace lypiz {

using Site = std::pair<int, int>;

/// Finite subset of Z^2 split into interior sites (all four neighbours in the
/// set) and boundary sites (at least one neighbour outside). Carries the
/// Dirichlet Laplacian 4I - A on the interior and its sparse Cholesky factor.
class LatticeDomain {
 public:
  /// Sites x in Z^2 with |x| < radius.
  static LatticeDomain disk(double radius) {
    if (!(radius > 0.0)) throw InvalidArgument("gmc", "disk radius n*r must be > 0");
    const int m = static_cast<int>(std::ceil(radius));
    std::vector<Site> sites;
    for (int y = -m; y <= m; ++y) {
      for (int x = -m; x <= m; ++x) {
        if (static_cast<double>(x) * x + static_cast<double>(y) * y < radius * radius) sites.emplace_back(x, y);
      }
    }
    return LatticeDomain(std::move(sites), m, "disk(" + std::to_string(radius) + ")", radius);
  }

  /// An m x m interior block {1..m}^2 with its surrounding boundary ring.
  static LatticeDomain box(int m) {
    if (m < 1) throw InvalidArgument("gmc", "box side must be >= 1");
    std::vector<Site> sites;
    for (int y = 0; y <= m + 1; ++y) {
      for (int x = 0; x <= m + 1; ++x) sites.emplace_back(x, y);
    }
    return LatticeDomain(std::move(sites), m + 1, "box(" + std::to_string(m) + ")", 0.0);
  }

  const std::string& name() const { return name_; }
  double radius() const { return radius_; }
  std::size_t num_sites() const { return sites_.size(); }
  std::size_t num_interior() const { return interior_.size(); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& site(std::size_t i) const { return sites_[i]; }
  bool is_interior(std::size_t i) const { return interior_pos_[i] >= 0; }
  /// Position among interior sites, or -1 for boundary sites.
  long interior_position(std::size_t i) const { return interior_pos_[i]; }
  const std::vector<std::size_t>& interior_sites() const { return interior_; }

  std::optional<std::size_t> index_of(Site s) const {
    const int gx = s.first + offset_;
    const int gy = s.second + offset_;
    if (gx < 0 || gy < 0 || gx >= width_ || gy >= width_) return std::nullopt;
    const long v = grid_[static_cast<std::size_t>(gy) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(gx)];
    if (v < 0) return std::nullopt;
    return static_cast<std::size_t>(v);
  }

  const Eigen::SparseMatrix<double>& laplacian() const { return state_->laplacian; }

  /// Column G(., source) over interior sites; cached.
  std::shared_ptr<const Eigen::VectorXd> green_column(std::size_t interior_pos) const {
    {
      std::lock_guard<std::mutex> lock(state_->mutex);
      auto it = state_->columns.find(interior_pos);
      if (it != state_->columns.end()) return it->second;
    }
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(interior_.size()));
    e(static_cast<Eigen::Index>(interior_pos)) = 1.0;
    auto col = std::make_shared<const Eigen::VectorXd>(factor().solve(e));
    std::lock_guard<std::mutex> lock(state_->mutex);
    return state_->columns.emplace(interior_pos, col).first->second;
  }

  /// G(x, y) for interior sites x, y given by coordinates.
  double green(Site x, Site y) const {
    const long px = interior_or_throw(x);
    const long py = interior_or_throw(y);
    return (*green_column(static_cast<std::size_t>(py)))(px);
  }

  /// G over all sites, zero whenever a boundary site is involved.
  double green_or_zero(std::size_t i, std::size_t j) const {
    if (interior_pos_[i] < 0 || interior_pos_[j] < 0) return 0.0;
    return (*green_column(static_cast<std::size_t>(interior_pos_[j])))(interior_pos_[i]);
  }

  /// Dense interior Green matrix, columns solved in parallel.
  Eigen::MatrixXd green_matrix(int threads = 0) const {
    const std::size_t n = interior_.size();
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    factor();
    parallel_for(n, resolve_threads(threads), [&](std::size_t c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      e(static_cast<Eigen::Index>(c)) = 1.0;
      g.col(static_cast<Eigen::Index>(c)) = state_->llt->solve(e);
    });
    return g;
  }

  const Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>& factor() const {
    std::call_once(state_->factor_once, [this] {
      auto llt = std::make_unique<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>>();
      llt->compute(state_->laplacian);
      if (llt->info() != Eigen::Success) {
        throw NumericalFailure("gmc", "Cholesky factorization of the Dirichlet Laplacian failed on " + name_);
      }
      state_->llt = std::move(llt);
    });
    return *state_->llt;
  }

 private:
  struct State {
    Eigen::SparseMatrix<double> laplacian;
    std::once_flag factor_once;
    std::unique_ptr<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>>> llt;
    std::mutex mutex;
    std::map<std::size_t, std::shared_ptr<const Eigen::VectorXd>> columns;
  };

  LatticeDomain(std::vector<Site> sites, int half_width, std::string name, double radius)
      : sites_(std::move(sites)), name_(std::move(name)), radius_(radius), offset_(half_width + 1),
        width_(2 * half_width + 3), state_(std::make_shared<State>()) {
    grid_.assign(static_cast<std::size_t>(width_) * static_cast<std::size_t>(width_), -1);
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      grid_[static_cast<std::size_t>(sites_[i].second + offset_) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(sites_[i].first + offset_)] = static_cast<long>(i);
    }
    interior_pos_.assign(sites_.size(), -1);
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      bool inner = true;
      for (const Site& nb : neighbours(sites_[i])) inner = inner && index_of(nb).has_value();
      if (inner) {
        interior_pos_[i] = static_cast<long>(interior_.size());
        interior_.push_back(i);
      }
    }
    if (interior_.empty()) throw InvalidArgument("gmc", "lattice domain " + name_ + " has no interior sites");
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t p = 0; p < interior_.size(); ++p) {
      const auto ip = static_cast<Eigen::Index>(p);
      trip.emplace_back(ip, ip, 4.0);
      for (const Site& nb : neighbours(sites_[interior_[p]])) {
        const std::size_t j = *index_of(nb);
        if (interior_pos_[j] >= 0) trip.emplace_back(ip, static_cast<Eigen::Index>(interior_pos_[j]), -1.0);
      }
    }
    const auto n = static_cast<Eigen::Index>(interior_.size());
    state_->laplacian.resize(n, n);
    state_->laplacian.setFromTriplets(trip.begin(), trip.end());
  }

  static std::array<Site, 4> neighbours(Site s) {
    return {Site{s.first + 1, s.second}, Site{s.first - 1, s.second}, Site{s.first, s.second + 1},
            Site{s.first, s.second - 1}};
  }

  long interior_or_throw(Site s) const {
    auto idx = index_of(s);
    const std::string label = "(" + std::to_string(s.first) + "," + std::to_string(s.second) + ")";
    if (!idx) throw InvalidArgument("gmc", "site " + label + " is not in " + name_);
    if (interior_pos_[*idx] < 0) throw InvalidArgument("gmc", "site " + label + " is a boundary site; Green's function is zero there");
    return interior_pos_[*idx];
  }

  std::vector<Site> sites_;
  std::string name_;
  double radius_;
  int offset_;
  int width_;
  std::vector<long> grid_;
  std::vector<long> interior_pos_;
  std::vector<std::size_t> interior_;
  std::shared_ptr<State> state_;
};

inline constexpr std::size_t kDefaultDgffSiteCap = 4000;

/// Zero-boundary DGFF sampler: x = P^T L^{-T} z with P A P^T = L L^T, so that
/// Cov(x) = A^{-1} = G.
class DgffSampler {
 public:
  explicit DgffSampler(const LatticeDomain& domain, std::size_t max_sites = kDefaultDgffSiteCap) : domain_(&domain) {
    if (domain.num_interior() > max_sites) {
      throw InvalidArgument("gmc", "domain too large for DGFF sampling: " + std::to_string(domain.num_interior()) +
                                       " interior sites > cap " + std::to_string(max_sites));
    }
    domain.factor();
  }

  /// Interior values only.
  Eigen::VectorXd sample_interior(Rng& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(static_cast<Eigen::Index>(domain_->num_interior()));
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    const auto& llt = domain_->factor();
    const Eigen::VectorXd y = llt.matrixU().solve(z);
    return llt.permutationPinv() * y;
  }

  /// Field over all sites; boundary sites carry `boundary_value` and the
  /// interior is shifted by it.
  std::vector<double> sample(Rng& rng, double boundary_value = 0.0) const {
    const Eigen::VectorXd v = sample_interior(rng);
    std::vector<double> out(domain_->num_sites(), boundary_value);
    for (std::size_t p = 0; p < domain_->num_interior(); ++p) {
      out[domain_->interior_sites()[p]] = v(static_cast<Eigen::Index>(p)) + boundary_value;
    }
    return out;
  }

 private:
  const LatticeDomain* domain_;
};

inline std::vector<double> dgff_sample(const LatticeDomain& domain, std::uint64_t seed, double boundary_value = 0.0,
                                       std::size_t max_sites = kDefaultDgffSiteCap) {
  Rng rng = make_stream(seed, 0);
  return DgffSampler(domain, max_sites).sample(rng, boundary_value);
}

struct DgffCheck {
  std::size_t samples = 0;
  double frobenius_relative_error = 0.0;
  double max_diagonal_z = 0.0;  // largest |emp var - G(x,x)| / SE over sites
};

/// Empirical covariance of `samples` DGFF draws against the solved G.
inline DgffCheck dgff_covariance_check(const LatticeDomain& domain, std::size_t samples, std::uint64_t seed,
                                       int threads = 0, std::size_t chunks = 64) {
  if (samples < 2) throw InvalidArgument("gmc", "need at least 2 samples");
  const DgffSampler sampler(domain);
  const auto n = static_cast<Eigen::Index>(domain.num_interior());
  chunks = std::min(chunks, samples);
  std::vector<Eigen::MatrixXd> partial(chunks);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    Rng rng = make_stream(seed, c);
    const std::size_t lo = samples * c / chunks;
    const std::size_t hi = samples * (c + 1) / chunks;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    const std::size_t block = 256;
    for (std::size_t s = lo; s < hi; s += block) {
      const std::size_t m = std::min(block, hi - s);
      Eigen::MatrixXd x(n, static_cast<Eigen::Index>(m));
      for (std::size_t j = 0; j < m; ++j) x.col(static_cast<Eigen::Index>(j)) = sampler.sample_interior(rng);
      acc.noalias() += x * x.transpose();
    }
    partial[c] = std::move(acc);
  });
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  for (const auto& p : partial) cov += p;
  cov /= static_cast<double>(samples);  // known zero mean
  const Eigen::MatrixXd g = domain.green_matrix(threads);
  DgffCheck r;
  r.samples = samples;
  r.frobenius_relative_error = (cov - g).norm() / g.norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double se = g(i, i) * std::sqrt(2.0 / static_cast<double>(samples));
    r.max_diagonal_z = std::max(r.max_diagonal_z, std::abs(cov(i, i) - g(i, i)) / se);
  }
  return r;
}

}  // namespace lypiz
