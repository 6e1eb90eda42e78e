#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lypiz/distribution.hpp"
#include "lypiz/error.hpp"
#include "lypiz/graph.hpp"
#include "lypiz/numeric.hpp"

namespace lypiz {

/// Sum_m exp(-(J/2)(theta + 2 pi m)^2) with theta reduced to (-pi, pi].
/// Images are added in pairs +-m until the first omitted term falls below
/// `tol` times the running sum.
inline double periodized_gaussian(double theta, double coupling, double tol = 1e-16) {
  const std::string mod = "spin-gibbs";
  if (!(coupling > 0.0) || !std::isfinite(coupling)) throw InvalidArgument(mod, "periodized_gaussian: J must be > 0");
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument(mod, "periodized_gaussian: tol must lie in (0, 1)");
  const double t = wrap_angle(theta);
  const double half_j = 0.5 * coupling;
  double sum = std::exp(-half_j * t * t);
  for (long m = 1; m < 10'000'000; ++m) {
    const double a = t + kTwoPi * static_cast<double>(m);
    const double b = t - kTwoPi * static_cast<double>(m);
    const double ta = std::exp(-half_j * a * a);
    const double tb = std::exp(-half_j * b * b);
    if (std::max(ta, tb) < tol * sum) break;
    sum += ta + tb;
  }
  return sum;
}

/// exp(B cos(dtheta)).
inline double xy_edge_weight(double dtheta, double inverse_temperature) {
  return std::exp(inverse_temperature * std::cos(dtheta));
}

enum class ModelKind { XY, Villain };

/// Gibbs specification on a finite graph. For XY the edge weight is
/// exp(B J_e cos(dtheta)); for Villain it is the periodized Gaussian with J_e.
/// Pinned vertices are held at fixed angles instead of being integrated.
struct ModelSpec {
  ModelKind kind = ModelKind::XY;
  FiniteGraph graph;
  double inverse_temperature = 1.0;
  std::map<std::string, double> pinned;
};

struct QuadratureOptions {
  /// Largest admissible number of tensor-grid evaluations N^{#free vertices}.
  double budget = 1e8;
};

namespace detail {

// Grid theta_k = -pi + 2 pi k / N. Index relative to theta = 0, folded so
// that cos(theta_k) == cos(2 pi fold(k) / N), fold(k) in [0, N/2].
inline std::size_t fold_index(std::size_t k, std::size_t n) {
  const std::size_t rel = (k + n / 2) % n;
  return std::min(rel, n - rel);
}

inline double grid_angle(std::size_t k, std::size_t n) {
  return -kPi + kTwoPi * static_cast<double>(k) / static_cast<double>(n);
}

// Edge weight scaled by a constant so that large couplings do not overflow.
inline double scaled_edge_weight(ModelKind kind, double dtheta, double coupling, double inverse_temperature) {
  if (kind == ModelKind::XY) {
    return std::exp(inverse_temperature * coupling * (std::cos(dtheta) - 1.0));
  }
  return periodized_gaussian(dtheta, coupling);
}

}  // namespace detail

/// Exact (periodic trapezoid) law of S = sum_v lambda_v cos(Theta_v) on the
/// uniform N-point angular grid. Free-boundary output is symmetrised; pinned
/// boundaries break the theta -> theta + pi symmetry and are left as is.
inline DiscretizedDistribution observable_distribution(const ModelSpec& model, int grid, QuadratureOptions opts = {}) {
  const std::string mod = "spin-gibbs";
  if (grid < 2 || grid % 2 != 0) throw InvalidArgument(mod, "grid size N must be even and >= 2");
  if (model.kind == ModelKind::XY && !(model.inverse_temperature > 0.0)) {
    throw InvalidArgument(mod, "inverse temperature must be > 0");
  }
  const FiniteGraph& g = model.graph;
  const std::size_t n = static_cast<std::size_t>(grid);
  const std::size_t nv = g.num_vertices();

  std::vector<bool> is_pinned(nv, false);
  std::vector<double> pin_angle(nv, 0.0);
  for (const auto& [id, angle] : model.pinned) {
    auto idx = g.index_of(id);
    if (!idx) throw InvalidArgument(mod, "pinned boundary on vertex '" + id + "' which is not in the graph");
    if (!(angle > -kPi && angle <= kPi)) throw InvalidArgument(mod, "pinned angle for '" + id + "' outside (-pi, pi]");
    is_pinned[*idx] = true;
    pin_angle[*idx] = angle;
  }

  std::vector<std::size_t> free_vertices;
  std::vector<std::size_t> position(nv, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!is_pinned[v]) {
      position[v] = free_vertices.size();
      free_vertices.push_back(v);
    }
  }
  const double evaluations = std::pow(static_cast<double>(n), static_cast<double>(free_vertices.size()));
  if (evaluations > opts.budget) {
    throw InvalidArgument(mod, "tensor quadrature needs N^|V| = " + std::to_string(grid) + "^" +
                                   std::to_string(free_vertices.size()) + " = " + std::to_string(evaluations) +
                                   " evaluations, above budget " + std::to_string(opts.budget));
  }

  double offset = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    if (is_pinned[v]) offset += g.weight(v) * std::cos(pin_angle[v]);
  }

  // Per free vertex: external field from pinned neighbours, and the
  // free-free edges whose later endpoint (in free order) is this vertex.
  const std::size_t nf = free_vertices.size();
  std::vector<std::vector<double>> field(nf, std::vector<double>(n, 1.0));
  struct BackEdge {
    std::size_t earlier;  // position in free order
    std::vector<double> table;  // weight indexed by (k_self - k_earlier) mod N
  };
  std::vector<std::vector<BackEdge>> back(nf);
  const double beta = model.inverse_temperature;
  for (const Edge& e : g.edges()) {
    const bool pu = is_pinned[e.u];
    const bool pv = is_pinned[e.v];
    if (pu && pv) continue;
    if (pu || pv) {
      const std::size_t f = pu ? e.v : e.u;
      const double a = pu ? pin_angle[e.u] : pin_angle[e.v];
      for (std::size_t k = 0; k < n; ++k) {
        field[position[f]][k] *= detail::scaled_edge_weight(model.kind, detail::grid_angle(k, n) - a, e.coupling, beta);
      }
      continue;
    }
    const std::size_t a = std::min(position[e.u], position[e.v]);
    const std::size_t b = std::max(position[e.u], position[e.v]);
    BackEdge be{a, std::vector<double>(n)};
    for (std::size_t d = 0; d < n; ++d) {
      be.table[d] = detail::scaled_edge_weight(model.kind, kTwoPi * static_cast<double>(d) / static_cast<double>(n),
                                               e.coupling, beta);
    }
    back[b].push_back(std::move(be));
  }

  // Observed free vertices (lambda > 0) index a folded accumulator.
  std::vector<std::size_t> observed;  // positions in free order
  std::vector<std::size_t> stride(nf, 0);
  const std::size_t half = n / 2 + 1;
  std::size_t acc_size = 1;
  for (std::size_t p = 0; p < nf; ++p) {
    if (g.weight(free_vertices[p]) > 0.0) {
      observed.push_back(p);
      stride[p] = acc_size;
      acc_size *= half;
      if (static_cast<double>(acc_size) > opts.budget) {
        throw InvalidArgument(mod, "folded accumulator exceeds budget");
      }
    }
  }
  std::vector<double> acc(acc_size, 0.0);

  std::vector<std::size_t> assign(nf, 0);
  // Depth-first enumeration with partial products.
  auto recurse = [&](auto&& self, std::size_t depth, double weight, std::size_t slot) -> void {
    if (depth == nf) {
      acc[slot] += weight;
      return;
    }
    for (std::size_t k = 0; k < n; ++k) {
      double w = weight * field[depth][k];
      for (const BackEdge& be : back[depth]) {
        w *= be.table[(k + n - assign[be.earlier]) % n];
      }
      if (w == 0.0) continue;
      assign[depth] = k;
      const std::size_t next = slot + stride[depth] * detail::fold_index(k, n);
      self(self, depth + 1, w, next);
    }
  };
  recurse(recurse, 0, 1.0, 0);

  std::vector<double> cos_table(half);
  for (std::size_t j = 0; j < half; ++j) cos_table[j] = std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(n));

  std::vector<Atom> atoms;
  atoms.reserve(acc_size);
  for (std::size_t s = 0; s < acc_size; ++s) {
    if (acc[s] <= 0.0) continue;
    double x = offset;
    std::size_t rest = s;
    for (std::size_t p : observed) {
      x += g.weight(free_vertices[p]) * cos_table[rest % half];
      rest /= half;
    }
    atoms.push_back(Atom{x, acc[s]});
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms), grid, model.pinned.empty());
}

/// Law of lambda_0 cos(theta_0) + lambda_1 cos(theta_n) for the free XY chain
/// with n edges at inverse temperature B, via n applications of the
/// discretised transition kernel.
inline DiscretizedDistribution transfer_chain_distribution(int n_edges, double inverse_temperature,
                                                           std::pair<double, double> lambda_ends, int grid) {
  const std::string mod = "spin-gibbs";
  if (n_edges < 1) throw InvalidArgument(mod, "chain length n must be >= 1");
  if (grid < 2 || grid % 2 != 0) throw InvalidArgument(mod, "grid size N must be even and >= 2");
  if (!(inverse_temperature > 0.0)) throw InvalidArgument(mod, "inverse temperature must be > 0");
  if (lambda_ends.first < 0.0 || lambda_ends.second < 0.0) throw InvalidArgument(mod, "lambda must be >= 0");
  if (lambda_ends.first == 0.0 && lambda_ends.second == 0.0) return DiscretizedDistribution::point_mass(0.0);

  const std::size_t n = static_cast<std::size_t>(grid);
  std::vector<double> step(n);
  for (std::size_t d = 0; d < n; ++d) {
    step[d] = std::exp(inverse_temperature * (std::cos(kTwoPi * static_cast<double>(d) / static_cast<double>(n)) - 1.0));
  }
  std::vector<double> power = step;
  std::vector<double> next(n);
  for (int s = 1; s < n_edges; ++s) {
    for (std::size_t d = 0; d < n; ++d) {
      CompensatedSum acc;
      for (std::size_t j = 0; j < n; ++j) acc.add(power[j] * step[(d + n - j) % n]);
      next[d] = acc.value();
    }
    const double total = compensated_sum(next);
    for (std::size_t d = 0; d < n; ++d) power[d] = next[d] / total;
  }

  const std::size_t half = n / 2 + 1;
  std::vector<double> acc(half * half, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      acc[detail::fold_index(a, n) * half + detail::fold_index(b, n)] += power[(b + n - a) % n];
    }
  }
  std::vector<Atom> atoms;
  atoms.reserve(acc.size());
  for (std::size_t i = 0; i < half; ++i) {
    const double c0 = std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n));
    for (std::size_t j = 0; j < half; ++j) {
      const double w = acc[i * half + j];
      if (w <= 0.0) continue;
      const double c1 = std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(n));
      atoms.push_back(Atom{lambda_ends.first * c0 + lambda_ends.second * c1, w});
    }
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms), grid, true);
}

}  // namespace lypiz
