#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lypiz/error.hpp"
#include "lypiz/numeric.hpp"

namespace lypiz {

struct Atom {
  double x = 0.0;
  double w = 0.0;
};

/// Atoms closer than this are merged.
inline constexpr double kCoalesceTolerance = 1e-12;

/// Finite atomic probability law {(x_j, w_j)}. Atoms are sorted by x,
/// coalesced, and the weights sum to one.
class DiscretizedDistribution {
 public:
  DiscretizedDistribution() : atoms_{Atom{0.0, 1.0}} {}

  /// Normalises, coalesces and (optionally) symmetrises by averaging with
  /// the reflected law. Non-positive weights are dropped; negative or
  /// non-finite weights are rejected.
  static DiscretizedDistribution from_atoms(std::vector<Atom> atoms, int grid_size = 0, bool symmetrize = false) {
    const std::string mod = "spin-gibbs";
    std::vector<Atom> kept;
    kept.reserve(atoms.size());
    for (const Atom& a : atoms) {
      if (!std::isfinite(a.x) || !std::isfinite(a.w) || a.w < 0.0) {
        throw InvalidArgument(mod, "atom with negative or non-finite weight/location");
      }
      if (a.w > 0.0) kept.push_back(a);
    }
    if (kept.empty()) throw InvalidArgument(mod, "distribution has no positive-weight atoms");

    DiscretizedDistribution d;
    d.grid_size_ = grid_size;
    d.symmetrized_ = symmetrize;
    d.atoms_ = symmetrize ? symmetrized(std::move(kept)) : coalesced(std::move(kept));
    d.normalize();
    return d;
  }

  static DiscretizedDistribution point_mass(double x = 0.0) { return from_atoms({Atom{x, 1.0}}); }

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  int grid_size() const { return grid_size_; }
  bool symmetrized() const { return symmetrized_; }

  double total_weight() const {
    CompensatedSum s;
    for (const Atom& a : atoms_) s.add(a.w);
    return s.value();
  }

  double mean() const {
    CompensatedSum s;
    for (const Atom& a : atoms_) s.add(a.w * a.x);
    return s.value();
  }

  /// E[|X|^p].
  double abs_moment(double p) const {
    CompensatedSum s;
    for (const Atom& a : atoms_) s.add(a.w * std::pow(std::abs(a.x), p));
    return s.value();
  }

  double variance() const {
    const double m = mean();
    CompensatedSum s;
    for (const Atom& a : atoms_) s.add(a.w * (a.x - m) * (a.x - m));
    return s.value();
  }

  double max_abs() const {
    double m = 0.0;
    for (const Atom& a : atoms_) m = std::max(m, std::abs(a.x));
    return m;
  }

  /// P(X <= x).
  double cdf(double x) const {
    CompensatedSum s;
    for (const Atom& a : atoms_) {
      if (a.x > x) break;
      s.add(a.w);
    }
    return s.value();
  }

  /// Law of c * X.
  DiscretizedDistribution scaled(double c) const {
    std::vector<Atom> out;
    out.reserve(atoms_.size());
    for (const Atom& a : atoms_) out.push_back(Atom{c * a.x, a.w});
    return from_atoms(std::move(out), grid_size_, symmetrized_);
  }

 private:
  static std::vector<Atom> coalesced(std::vector<Atom> atoms) {
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.x < b.x; });
    std::vector<Atom> out;
    std::size_t i = 0;
    while (i < atoms.size()) {
      const double anchor = atoms[i].x;
      CompensatedSum w;
      CompensatedSum wx;
      std::size_t j = i;
      while (j < atoms.size() && atoms[j].x - anchor < kCoalesceTolerance) {
        w.add(atoms[j].w);
        wx.add(atoms[j].w * atoms[j].x);
        ++j;
      }
      const double x = (j - i == 1) ? anchor : wx.value() / w.value();
      out.push_back(Atom{x, w.value()});
      i = j;
    }
    return out;
  }

  // Folds onto |x|, coalesces, then unfolds with equal halves so the result
  // is exactly invariant under x -> -x.
  static std::vector<Atom> symmetrized(std::vector<Atom> atoms) {
    for (Atom& a : atoms) a.x = std::abs(a.x);
    auto folded = coalesced(std::move(atoms));
    std::vector<Atom> out;
    out.reserve(2 * folded.size());
    for (auto it = folded.rbegin(); it != folded.rend(); ++it) {
      if (it->x >= kCoalesceTolerance) out.push_back(Atom{-it->x, 0.5 * it->w});
    }
    for (const Atom& a : folded) {
      if (a.x < kCoalesceTolerance) {
        out.push_back(Atom{0.0, a.w});
      } else {
        out.push_back(Atom{a.x, 0.5 * a.w});
      }
    }
    return out;
  }

  void normalize() {
    const double total = total_weight();
    for (Atom& a : atoms_) a.w /= total;
  }

  std::vector<Atom> atoms_;
  int grid_size_ = 0;
  bool symmetrized_ = false;
};

/// sup_x |F_a(x) - F_b(x)|, exact for atomic laws.
inline double kolmogorov_distance(const DiscretizedDistribution& a, const DiscretizedDistribution& b) {
  const auto& xa = a.atoms();
  const auto& xb = b.atoms();
  std::size_t i = 0;
  std::size_t j = 0;
  CompensatedSum fa;
  CompensatedSum fb;
  double best = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i].x <= xb[j].x)) {
      x = xa[i].x;
    } else {
      x = xb[j].x;
    }
    while (i < xa.size() && xa[i].x <= x) fa.add(xa[i++].w);
    while (j < xb.size() && xb[j].x <= x) fb.add(xb[j++].w);
    best = std::max(best, std::abs(fa.value() - fb.value()));
  }
  return best;
}

}  // namespace lypiz
