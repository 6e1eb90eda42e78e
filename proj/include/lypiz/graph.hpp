#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lypiz/error.hpp"

namespace lypiz {

/// Undirected edge between two vertex indices with a positive coupling J_e.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double coupling = 1.0;
};

/// Finite graph with per-edge couplings J_e > 0 and per-vertex field
/// weights lambda_v >= 0. Immutable once built; use build_graph().
class FiniteGraph {
 public:
  FiniteGraph() = default;

  std::size_t num_vertices() const { return ids_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const std::vector<std::string>& vertex_ids() const { return ids_; }
  const std::string& vertex_id(std::size_t i) const { return ids_.at(i); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_.at(i); }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t degree(std::size_t i) const {
    return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [i](const Edge& e) {
      return e.u == i || e.v == i;
    }));
  }

  /// Key "a|b" with the endpoint ids sorted lexicographically.
  std::string edge_key(const Edge& e) const { return edge_key(ids_.at(e.u), ids_.at(e.v)); }

  static std::string edge_key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
  }

  friend FiniteGraph build_graph(std::vector<std::string> vertices,
                                 const std::vector<std::pair<std::string, std::string>>& edges,
                                 const std::vector<double>& couplings, std::vector<double> weights);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
};

/// Validates and assembles a FiniteGraph. `couplings` runs parallel to
/// `edges`, `weights` parallel to `vertices`.
inline FiniteGraph build_graph(std::vector<std::string> vertices,
                               const std::vector<std::pair<std::string, std::string>>& edges,
                               const std::vector<double>& couplings, std::vector<double> weights) {
  const std::string mod = "graph-core";
  if (couplings.size() != edges.size()) {
    throw InvalidArgument(mod, "coupling count " + std::to_string(couplings.size()) +
                                   " does not match edge count " + std::to_string(edges.size()));
  }
  if (weights.size() != vertices.size()) {
    throw InvalidArgument(mod, "weight count " + std::to_string(weights.size()) +
                                   " does not match vertex count " + std::to_string(vertices.size()));
  }

  FiniteGraph g;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!g.index_.emplace(vertices[i], i).second) {
      throw InvalidArgument(mod, "duplicate vertex '" + vertices[i] + "'");
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InvalidArgument(mod, "negative or non-finite lambda at vertex '" + vertices[i] + "'");
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, bool> seen;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& [a, b] = edges[k];
    const std::string label = "{" + a + "," + b + "}";
    auto ia = g.index_.find(a);
    auto ib = g.index_.find(b);
    if (ia == g.index_.end() || ib == g.index_.end()) {
      throw InvalidArgument(mod, "edge " + label + " has an endpoint that is not a listed vertex");
    }
    if (ia->second == ib->second) throw InvalidArgument(mod, "self-loop " + label);
    const auto key = std::minmax(ia->second, ib->second);
    if (!seen.emplace(key, true).second) throw InvalidArgument(mod, "duplicate edge " + label);
    if (!(couplings[k] > 0.0) || !std::isfinite(couplings[k])) {
      throw InvalidArgument(mod, "non-positive coupling J on edge " + label);
    }
    g.edges_.push_back(Edge{ia->second, ib->second, couplings[k]});
  }

  g.ids_ = std::move(vertices);
  g.weights_ = std::move(weights);
  return g;
}

/// The graph G_n^*: every vertex v becomes a star centre "v*" joined (with
/// coupling J) to one port vertex per incident edge, and every edge becomes
/// a chain of n edges with coupling n / J_e. Only star centres carry field
/// weight (lambda_{v*} = lambda_v).
struct SubdividedGraph {
  FiniteGraph base;
  int n = 1;
  double star_coupling = 1.0;
  FiniteGraph graph;
  /// star_vertex[v] = index in `graph` of v* for base vertex v.
  std::vector<std::size_t> star_vertex;
  /// chain_coupling[e] = n / J_e for base edge e.
  std::vector<double> chain_coupling;
};

/// Label of the chain vertex (v, e, k), canonicalised so that
/// (v, e, k) == (w, e, n - k) for e = {v, w}. Rendered "u|e<idx>|k" with u the
/// lexicographically smaller endpoint id.
inline std::string chain_vertex_label(const FiniteGraph& g, std::size_t edge_index, std::size_t from_vertex,
                                      int k, int n) {
  const Edge& e = g.edges().at(edge_index);
  const std::string& a = g.vertex_id(e.u);
  const std::string& b = g.vertex_id(e.v);
  const bool a_first = a < b;
  const std::size_t anchor = a_first ? e.u : e.v;
  const int kk = (from_vertex == anchor) ? k : n - k;
  return g.vertex_id(anchor) + "|e" + std::to_string(edge_index) + "|" + std::to_string(kk);
}

inline SubdividedGraph subdivide(const FiniteGraph& g, int n, double star_coupling) {
  const std::string mod = "graph-core";
  if (n < 1) throw InvalidArgument(mod, "subdivision count n must be >= 1, got " + std::to_string(n));
  if (!(star_coupling > 0.0) || !std::isfinite(star_coupling)) {
    throw InvalidArgument(mod, "star coupling J must be positive");
  }

  std::vector<std::string> ids;
  std::vector<double> lambda;
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<double> couplings;

  SubdividedGraph out;
  out.base = g;
  out.n = n;
  out.star_coupling = star_coupling;

  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    ids.push_back(g.vertex_id(v) + "*");
    lambda.push_back(g.weight(v));
  }
  // Chain vertices k = 0..n for each edge; k = 0 and k = n are the port
  // vertices attached to the two star centres.
  for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
    const Edge& e = g.edges()[ei];
    for (int k = 0; k <= n; ++k) {
      ids.push_back(chain_vertex_label(g, ei, e.u, k, n));
      lambda.push_back(0.0);
    }
  }
  for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
    const Edge& e = g.edges()[ei];
    const double chain = static_cast<double>(n) / e.coupling;
    out.chain_coupling.push_back(chain);
    for (std::size_t endpoint : {e.u, e.v}) {
      edges.emplace_back(g.vertex_id(endpoint) + "*", chain_vertex_label(g, ei, endpoint, 0, n));
      couplings.push_back(star_coupling);
    }
    for (int k = 0; k < n; ++k) {
      edges.emplace_back(chain_vertex_label(g, ei, e.u, k, n), chain_vertex_label(g, ei, e.u, k + 1, n));
      couplings.push_back(chain);
    }
  }

  out.graph = build_graph(std::move(ids), edges, couplings, std::move(lambda));
  for (std::size_t v = 0; v < g.num_vertices(); ++v) out.star_vertex.push_back(v);
  return out;
}

/// Inverse of subdivide: drops interior chain vertices, re-identifies each
/// port with its star centre and recovers J_e = n / B_e.
inline FiniteGraph contract(const SubdividedGraph& s) {
  const FiniteGraph& g = s.base;
  std::vector<std::string> ids;
  std::vector<double> lambda;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const std::string& star = s.graph.vertex_id(s.star_vertex[v]);
    ids.push_back(star.substr(0, star.size() - 1));
    lambda.push_back(s.graph.weight(s.star_vertex[v]));
  }
  // Each star edge pairs a centre with a port; a chain runs port-to-port.
  std::unordered_map<std::string, std::size_t> port_owner;
  for (const Edge& e : s.graph.edges()) {
    const std::string& a = s.graph.vertex_id(e.u);
    const std::string& b = s.graph.vertex_id(e.v);
    if (!a.empty() && a.back() == '*') port_owner[b] = e.u;
    if (!b.empty() && b.back() == '*') port_owner[a] = e.v;
  }
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<double> couplings;
  for (std::size_t ei = 0; ei < g.num_edges(); ++ei) {
    const Edge& e = g.edges()[ei];
    const auto p0 = port_owner.at(chain_vertex_label(g, ei, e.u, 0, s.n));
    const auto p1 = port_owner.at(chain_vertex_label(g, ei, e.v, 0, s.n));
    edges.emplace_back(ids.at(p0), ids.at(p1));
    couplings.push_back(static_cast<double>(s.n) / s.chain_coupling.at(ei));
  }
  return build_graph(std::move(ids), edges, couplings, std::move(lambda));
}

}  // namespace lypiz
