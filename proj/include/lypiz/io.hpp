#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lypiz/distribution.hpp"
#include "lypiz/error.hpp"
#include "lypiz/graph.hpp"
#include "lypiz/ly_class.hpp"
#include "lypiz/spin_gibbs.hpp"
#include "lypiz/zeros.hpp"

namespace lypiz::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("io", "cannot open '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("io", "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("io", "cannot write '" + path + "'");
  os << text;
}

/// {"format_version", "kind", "config", "result"}: every output carries the
/// configuration that produced it.
inline json envelope(const std::string& kind, const json& config, const json& result) {
  return json{{"format_version", kFormatVersion}, {"kind", kind}, {"config", config}, {"result", result}};
}

// Graph: {"vertices":[...], "edges":[["u","v"],...], "J":{"u|v":..}, "lambda":{"u":..}}.
// Missing J entries default to 1, missing lambda entries to 0.
inline FiniteGraph graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("edges")) {
    throw InvalidArgument("io", "graph JSON needs \"vertices\" and \"edges\"");
  }
  std::vector<std::string> vertices = j.at("vertices").get<std::vector<std::string>>();
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<double> couplings;
  const json couplings_json = j.value("J", json::object());
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw InvalidArgument("io", "each edge must be a pair [\"u\",\"v\"]");
    const auto u = e[0].get<std::string>();
    const auto v = e[1].get<std::string>();
    edges.emplace_back(u, v);
    const std::string key = FiniteGraph::edge_key(u, v);
    couplings.push_back(couplings_json.contains(key) ? couplings_json.at(key).get<double>() : 1.0);
  }
  std::vector<double> weights;
  const json lambda_json = j.value("lambda", json::object());
  for (const auto& [id, _] : lambda_json.items()) {
    if (std::find(vertices.begin(), vertices.end(), id) == vertices.end()) {
      throw InvalidArgument("io", "lambda given for unknown vertex '" + id + "'");
    }
  }
  for (const auto& v : vertices) weights.push_back(lambda_json.contains(v) ? lambda_json.at(v).get<double>() : 0.0);
  return build_graph(std::move(vertices), std::move(edges), std::move(couplings), std::move(weights));
}

inline json graph_to_json(const FiniteGraph& g) {
  json edges = json::array();
  json couplings = json::object();
  json lambda = json::object();
  for (const Edge& e : g.edges()) {
    edges.push_back({g.vertex_id(e.u), g.vertex_id(e.v)});
    couplings[g.edge_key(e)] = e.coupling;
  }
  for (std::size_t i = 0; i < g.num_vertices(); ++i) lambda[g.vertex_id(i)] = g.weight(i);
  return json{{"vertices", g.vertex_ids()}, {"edges", edges}, {"J", couplings}, {"lambda", lambda}};
}

inline const char* to_string(ModelKind k) { return k == ModelKind::XY ? "XY" : "Villain"; }

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "XY" || s == "xy") return ModelKind::XY;
  if (s == "Villain" || s == "villain") return ModelKind::Villain;
  throw InvalidArgument("io", "unknown model '" + s + "' (expected XY or Villain)");
}

inline json model_spec_to_json(const ModelSpec& m) {
  return json{{"model", to_string(m.kind)},
              {"beta", m.inverse_temperature},
              {"graph", graph_to_json(m.graph)},
              {"pinned", m.pinned}};
}

inline ModelSpec model_spec_from_json(const json& j) {
  ModelSpec m;
  m.kind = model_kind_from_string(j.value("model", std::string("XY")));
  m.inverse_temperature = j.value("beta", 1.0);
  m.graph = graph_from_json(j.at("graph"));
  if (j.contains("pinned")) m.pinned = j.at("pinned").get<std::map<std::string, double>>();
  return m;
}

inline json distribution_to_json(const DiscretizedDistribution& d) {
  json atoms = json::array();
  for (const Atom& a : d.atoms()) atoms.push_back({a.x, a.w});
  return json{{"grid_size", d.grid_size()}, {"symmetrized", d.symmetrized()}, {"atoms", atoms}};
}

inline DiscretizedDistribution distribution_from_json(const json& j) {
  const json& body = j.contains("result") ? j.at("result") : j;
  if (!body.contains("atoms")) throw InvalidArgument("io", "distribution JSON needs \"atoms\"");
  std::vector<Atom> atoms;
  for (const auto& a : body.at("atoms")) {
    if (a.is_array() && a.size() == 2) {
      atoms.push_back(Atom{a[0].get<double>(), a[1].get<double>()});
    } else if (a.is_object()) {
      atoms.push_back(Atom{a.at("x").get<double>(), a.at("w").get<double>()});
    } else {
      throw InvalidArgument("io", "atom must be [x, w] or {\"x\":..,\"w\":..}");
    }
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms), body.value("grid_size", 0), body.value("symmetrized", false));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string distribution_to_csv(const DiscretizedDistribution& d) {
  std::ostringstream os;
  os << "# format_version=" << kFormatVersion << "\nx,w\n";
  for (const Atom& a : d.atoms()) os << format_double(a.x) << ',' << format_double(a.w) << '\n';
  return os.str();
}

inline DiscretizedDistribution distribution_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<Atom> atoms;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("io", "CSV line " + std::to_string(lineno) + " lacks a comma");
    try {
      atoms.push_back(Atom{std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw InvalidArgument("io", "CSV line " + std::to_string(lineno) + " is not numeric");
    }
  }
  return DiscretizedDistribution::from_atoms(std::move(atoms));
}

/// Reads .csv or JSON (bare or wrapped in an envelope) by extension.
inline DiscretizedDistribution load_distribution(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("io", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return distribution_from_csv(ss.str());
  }
  return distribution_from_json(read_json_file(path));
}

inline json rect_to_json(const Rect& r) {
  return json{{"re_min", r.re_min}, {"re_max", r.re_max}, {"im_min", r.im_min}, {"im_max", r.im_max}};
}

inline Rect rect_from_json(const json& j) {
  return Rect{j.at("re_min").get<double>(), j.at("re_max").get<double>(), j.at("im_min").get<double>(),
              j.at("im_max").get<double>()};
}

inline json zero_report_to_json(const ZeroReport& r) {
  json zeros = json::array();
  for (const auto& z : r.zeros) {
    zeros.push_back({{"re", z.location.real()},
                     {"im", z.location.imag()},
                     {"residual", z.residual},
                     {"refined", z.refined},
                     {"multiplicity", z.multiplicity}});
  }
  return json{{"requested_region", rect_to_json(r.requested_region)},
              {"region", rect_to_json(r.region)},
              {"zeros", zeros},
              {"total_count", r.total_count},
              {"verdict", to_string(r.verdict)},
              {"max_abs_re", r.max_abs_re},
              {"tol", r.tol},
              {"quadruple_consistent", r.quadruple_consistent}};
}

inline std::string zero_report_to_csv(const ZeroReport& r) {
  std::ostringstream os;
  os << "# format_version=" << kFormatVersion << " verdict=" << to_string(r.verdict) << "\nre,im,residual,multiplicity\n";
  for (const auto& z : r.zeros) {
    os << format_double(z.location.real()) << ',' << format_double(z.location.imag()) << ',' << format_double(z.residual)
       << ',' << z.multiplicity << '\n';
  }
  return os.str();
}

inline json tail_profile_to_json(const TailProfile& t) {
  return json{{"exponent_a", t.exponent_a},
              {"coefficient", t.coefficient},
              {"window", {t.window_lo, t.window_hi}},
              {"fit_residual", t.fit_residual},
              {"method", t.method == TailMethod::FromMoments ? "moments" : "tail-probabilities"}};
}

inline json class_verdict_to_json(const ClassVerdict& v) {
  return json{{"symmetric", v.symmetric},
              {"subgaussian", to_string(v.subgaussian)},
              {"b_hat", v.b_hat},
              {"piz", to_string(v.piz)},
              {"verdict", to_string(v.verdict)},
              {"numerical_tension", v.numerical_tension},
              {"note", v.note}};
}

inline json weak_limit_report_to_json(const WeakLimitReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json item{{"variance", e.variance},
              {"distance_to_previous", e.distance_to_previous},
              {"distance_to_limit", e.distance_to_limit},
              {"verdict", to_string(e.zeros.verdict)}};
    if (e.first_zero) item["first_zero"] = {e.first_zero->real(), e.first_zero->imag()};
    entries.push_back(item);
  }
  json out{{"entries", entries},
           {"distances_to_limit_nonincreasing", r.distances_to_limit_nonincreasing},
           {"consecutive_distances_nonincreasing", r.consecutive_distances_nonincreasing},
           {"max_variance", r.max_variance},
           {"variance_bounded", r.variance_bounded},
           {"all_piz", r.all_piz},
           {"corollary_seq_triggered", r.corollary_seq_triggered},
           {"corollary_seq_contradiction", r.corollary_seq_contradiction},
           {"consistent_with_weak_limit", r.consistent_with_weak_limit},
           {"statement", r.statement}};
  if (r.limit_verdict) out["limit_verdict"] = class_verdict_to_json(*r.limit_verdict);
  return out;
}

/// Columns: index, Kolmogorov distance to the limit, first zero, variance.
inline std::string weak_limit_report_to_csv(const WeakLimitReport& r) {
  std::ostringstream os;
  os << "# format_version=" << kFormatVersion << "\nn,distance_to_limit,first_zero_re,first_zero_im,variance\n";
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    const Complex z = e.first_zero.value_or(Complex(std::nan(""), std::nan("")));
    os << i << ',' << format_double(e.distance_to_limit) << ',' << format_double(z.real()) << ','
       << format_double(z.imag()) << ',' << format_double(e.variance) << '\n';
  }
  return os.str();
}

}  // namespace lypiz::io
