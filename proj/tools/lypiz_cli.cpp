// lypiz command line: one subcommand per pipeline stage. Every option may
// also come from --config (a flat JSON object, or an earlier output whose
// "config" member is reused); command-line values win.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <type_traits>

#include "lypiz/lypiz.hpp"

namespace {

using json = nlohmann::json;
namespace io = lypiz::io;

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

std::string flag_name(const std::string& key) {
  std::string f = "--" + key;
  for (char& c : f) c = c == '_' ? '-' : c;
  return f;
}

/// Options of one subcommand, with JSON load/dump so that --config can fill
/// anything not given on the command line and outputs can echo the result.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON file supplying option values");
    app_->add_option("--out", out_dir_, "output directory")->capture_default_str();
    app_->add_option("--threads", threads_, "worker threads (default: LYPIZ_THREADS or 1)");
  }

  template <class T>
  CLI::Option* add(const std::string& key, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option(flag_name(key), var, help)->capture_default_str();
    if constexpr (is_vector<T>::value) o->delimiter(',');
    bind(o, key, var);
    return o;
  }

  CLI::Option* add_flag(const std::string& key, bool& var, const std::string& help) {
    CLI::Option* o = app_->add_flag(flag_name(key), var, help);
    bind(o, key, var);
    return o;
  }

  void add_seed() {
    seed_opt_ = add("seed", seed_, "master seed (required)");
  }

  /// Call after parsing.
  void resolve() {
    if (!config_path_.empty()) {
      config_ = io::read_json_file(config_path_);
      if (config_.contains("config") && config_.contains("format_version")) config_ = json(config_.at("config"));
      if (!config_.is_object()) throw UsageError("--config must hold a JSON object");
    }
    for (auto& b : bindings_) {
      if (b.option->count() == 0 && config_.contains(b.key)) {
        try {
          b.load(config_.at(b.key));
        } catch (const json::exception& e) {
          throw UsageError("config key '" + b.key + "': " + e.what());
        }
      }
    }
    if (seed_opt_ != nullptr && seed_opt_->count() == 0 && !config_.contains("seed")) {
      throw UsageError("--seed is required for '" + app_->get_name() + "'");
    }
  }

  json resolved() const {
    json j = json::object();
    for (const auto& b : bindings_) j[b.key] = b.dump();
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    j["threads"] = lypiz::resolve_threads(threads_);
    return j;
  }

  const json& config() const { return config_; }
  /// Adds a resolved value that has no option of its own.
  void record(const std::string& key, const json& value) { extra_[key] = value; }
  int threads() const { return threads_; }
  std::uint64_t seed() const { return seed_; }

  std::filesystem::path out(const std::string& file) const {
    std::filesystem::create_directories(out_dir_);
    return std::filesystem::path(out_dir_) / file;
  }

  void write(const std::string& file, const std::string& text) const { io::write_text_file(out(file).string(), text); }
  void write(const std::string& file, const std::string& kind, const json& result) const {
    write(file, io::envelope(kind, resolved(), result).dump(2) + "\n");
  }

 private:
  struct Binding {
    CLI::Option* option;
    std::string key;
    std::function<void(const json&)> load;
    std::function<json()> dump;
  };

  template <class T>
  void bind(CLI::Option* o, const std::string& key, T& var) {
    auto load = [&var](const json& j) {
      // an inline object (e.g. "graph") is read separately, not into the path option
      if constexpr (std::is_same_v<T, std::string>) {
        if (j.is_object()) return;
      }
      var = j.get<T>();
    };
    bindings_.push_back({o, key, load, [&var] { return json(var); }});
  }

  CLI::App* app_;
  std::string config_path_;
  std::string out_dir_ = ".";
  int threads_ = 0;
  std::uint64_t seed_ = 0;
  CLI::Option* seed_opt_ = nullptr;
  json config_ = json::object();
  json extra_ = json::object();
  std::vector<Binding> bindings_;
};

lypiz::Rect rect_from(const std::vector<double>& v) {
  if (v.size() != 4) throw UsageError("--region needs re_min,re_max,im_min,im_max");
  return lypiz::Rect{v[0], v[1], v[2], v[3]};
}

// Graph from the --graph path, or inline under "graph" in the config.
lypiz::FiniteGraph load_graph(const std::string& path, Params& p) {
  json g;
  if (!path.empty()) {
    g = io::read_json_file(path);
  } else if (p.config().contains("graph") && p.config().at("graph").is_object()) {
    g = p.config().at("graph");
  } else {
    throw UsageError("a graph is required (--graph <file> or an inline \"graph\" object in --config)");
  }
  auto graph = io::graph_from_json(g);
  p.record("graph", io::graph_to_json(graph));
  return graph;
}

std::map<std::string, double> load_pinned(Params& p) {
  if (!p.config().contains("pinned")) return {};
  auto pinned = p.config().at("pinned").get<std::map<std::string, double>>();
  p.record("pinned", pinned);
  return pinned;
}

struct Command {
  CLI::App* app;
  std::unique_ptr<Params> params;
  std::function<int(Params&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lee-Yang zero analysis for XY/Villain observables and discrete GMC"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::vector<Command> commands;
  auto command = [&](const std::string& name, const std::string& help) -> Command& {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.push_back({sub, std::make_unique<Params>(sub), {}});
    return commands.back();
  };

  // spin-dist
  {
    auto& c = command("spin-dist", "law of sum lambda_v cos(theta_v) for an XY or Villain model");
    auto s = std::make_shared<std::tuple<std::string, std::string, double, int>>("", "XY", 1.0, 64);
    auto& [graph, model, beta, grid] = *s;
    c.params->add("graph", graph, "graph JSON file");
    c.params->add("model", model, "XY or Villain");
    c.params->add("beta", beta, "inverse temperature");
    c.params->add("grid", grid, "angular grid size N");
    c.run = [s](Params& p) {
      auto& [graph, model, beta, grid] = *s;
      lypiz::ModelSpec m{io::model_kind_from_string(model), load_graph(graph, p), beta, load_pinned(p)};
      const auto d = lypiz::observable_distribution(m, grid);
      json result = io::distribution_to_json(d);
      result["mean"] = d.mean();
      result["variance"] = d.variance();
      result["model"] = io::model_spec_to_json(m);
      p.write("distribution.json", "distribution", result);
      p.write("distribution.csv", io::distribution_to_csv(d));
      std::cout << "atoms: " << d.size() << "  variance: " << io::format_double(d.variance()) << "\n";
      return 0;
    };
  }

  // zeros
  {
    auto& c = command("zeros", "locate MGF zeros of a distribution file");
    auto s = std::make_shared<std::tuple<std::string, std::vector<double>, double>>(
        "", std::vector<double>{-4, 4, 0, 8}, 1e-10);
    auto& [input, region, tol] = *s;
    c.params->add("input", input, "distribution (.json or .csv)");
    c.params->add("region", region, "re_min,re_max,im_min,im_max");
    c.params->add("tol", tol, "zero location tolerance");
    c.run = [s](Params& p) {
      auto& [input, region, tol] = *s;
      if (input.empty()) throw UsageError("--input is required for 'zeros'");
      const auto d = io::load_distribution(input);
      const auto rep = lypiz::locate_zeros(lypiz::EntireMGF(d), rect_from(region), tol);
      p.write("zeros.json", "zero-report", io::zero_report_to_json(rep));
      p.write("zeros.csv", io::zero_report_to_csv(rep));
      std::cout << "zeros: " << rep.zeros.size() << "  verdict: " << lypiz::to_string(rep.verdict) << "\n";
      return 0;
    };
  }

  // classify
  {
    auto& c = command("classify", "Lee-Yang class verdict for a distribution file");
    auto s = std::make_shared<std::tuple<std::string, std::vector<double>, double, std::vector<double>>>(
        "", std::vector<double>{-4, 4, 0, 8}, 1e-10, std::vector<double>{});
    auto& [input, region, tol, moments] = *s;
    c.params->add("input", input, "distribution (.json or .csv)");
    c.params->add("region", region, "re_min,re_max,im_min,im_max");
    c.params->add("tol", tol, "zero location tolerance");
    c.params->add("moments", moments, "even moments m_2, m_4, ... for a tail fit");
    c.run = [s](Params& p) {
      auto& [input, region, tol, moments] = *s;
      if (input.empty() && moments.empty()) throw UsageError("classify needs --input and/or --moments");
      lypiz::ClassifyInput in;
      json result = json::object();
      if (!input.empty()) {
        in.distribution = io::load_distribution(input);
        in.zeros = lypiz::locate_zeros(lypiz::EntireMGF(*in.distribution), rect_from(region), tol);
        result["zeros"] = io::zero_report_to_json(*in.zeros);
      }
      if (!moments.empty()) {
        in.tail = lypiz::tail_exponent_from_moments(moments);
        result["tail"] = io::tail_profile_to_json(*in.tail);
      }
      const auto v = lypiz::classify(in);
      result["verdict"] = io::class_verdict_to_json(v);
      p.write("classify.json", "class-verdict", result);
      std::cout << "verdict: " << lypiz::to_string(v.verdict) << "\n";
      return 0;
    };
  }

  // chain-limit
  {
    auto& c = command("chain-limit", "XY chain kernel against the wrapped heat kernel");
    auto s = std::make_shared<std::tuple<std::vector<int>, std::vector<double>, int>>(
        std::vector<int>{16, 32, 64, 128, 256}, std::vector<double>{1.0}, 512);
    auto& [ns, bs, grid] = *s;
    c.params->add("n", ns, "chain lengths");
    c.params->add("b", bs, "scaled inverse temperatures (B_n = n b)");
    c.params->add("grid", grid, "angular grid size");
    c.run = [s](Params& p) {
      auto& [ns, bs, grid] = *s;
      std::vector<std::pair<int, double>> points;
      for (double b : bs) {
        for (int n : ns) points.emplace_back(n, b);
      }
      std::vector<lypiz::ChainHeatReport> reps(points.size());
      lypiz::parallel_for(points.size(), lypiz::resolve_threads(p.threads()),
                          [&](std::size_t i) { reps[i] = lypiz::chain_vs_heat(points[i].first, points[i].second, grid); });
      std::ostringstream csv;
      csv << "# format_version=" << io::kFormatVersion << "\nn,b,inverse_temperature,sup_distance,l1_distance,max_mass_error\n";
      json rows = json::array();
      for (const auto& r : reps) {
        csv << r.n << ',' << io::format_double(r.b) << ',' << io::format_double(r.inverse_temperature) << ','
            << io::format_double(r.sup_distance) << ',' << io::format_double(r.l1_distance) << ','
            << io::format_double(r.max_mass_error) << '\n';
        rows.push_back({{"n", r.n},
                        {"b", r.b},
                        {"inverse_temperature", r.inverse_temperature},
                        {"sup_distance", r.sup_distance},
                        {"l1_distance", r.l1_distance},
                        {"max_mass_error", r.max_mass_error}});
        std::cout << "n=" << r.n << " b=" << r.b << " sup=" << io::format_double(r.sup_distance) << "\n";
      }
      p.write("chain_limit.csv", csv.str());
      p.write("chain_limit.json", "chain-limit", rows);
      return 0;
    };
  }

  // dirichlet-ratio
  {
    auto& c = command("dirichlet-ratio", "ratio of pinned-end chain partition functions");
    auto s = std::make_shared<std::tuple<int, double, std::vector<double>, std::vector<double>, int>>(
        256, 1.0, std::vector<double>{0.0, lypiz::kPi / 2}, std::vector<double>{0.0, 0.0}, 512);
    auto& [n, b, first, second, grid] = *s;
    c.params->add("n", n, "chain length");
    c.params->add("b", b, "scaled inverse temperature");
    c.params->add("first", first, "end angles theta0,theta1");
    c.params->add("second", second, "end angles theta0',theta1'");
    c.params->add("grid", grid, "angular grid size");
    c.run = [s](Params& p) {
      auto& [n, b, first, second, grid] = *s;
      if (first.size() != 2 || second.size() != 2) throw UsageError("--first and --second take two angles");
      const auto r = lypiz::dirichlet_ratio(n, b, {first[0], first[1]}, {second[0], second[1]}, grid);
      p.write("dirichlet_ratio.json", "dirichlet-ratio",
              {{"ratio", r.ratio},
               {"limit_ratio", r.limit_ratio},
               {"abs_difference", std::abs(r.ratio - r.limit_ratio)},
               {"log_partition_first", r.log_partition_first},
               {"log_partition_second", r.log_partition_second}});
      std::cout << "ratio: " << io::format_double(r.ratio) << "  limit: " << io::format_double(r.limit_ratio) << "\n";
      return 0;
    };
  }

  // gmc-moments
  {
    auto& c = command("gmc-moments", "Coulomb-gas moments E|W_U|^{2k} with growth fit");
    auto s = std::make_shared<std::tuple<double, int, std::uint64_t, std::string, int, bool>>(
        1.44, 5, 1'000'000, "unit-disk", 100, false);
    auto& [beta_sq, k_max, samples, region, batches, stratified] = *s;
    c.params->add_seed();
    c.params->add("beta_sq", beta_sq, "beta^2 in (0, 2)");
    c.params->add("k_max", k_max, "largest k");
    c.params->add("samples", samples, "Monte Carlo samples per k");
    c.params->add("region", region, "unit-disk, unit-square or disk:<radius>");
    c.params->add("batches", batches, "batches for standard errors");
    c.params->add_flag("stratified", stratified, "stratify the first charge");
    c.run = [s](Params& p) {
      auto& [beta_sq, k_max, samples, region, batches, stratified] = *s;
      lypiz::Region u;
      if (region == "unit-disk") {
        u = lypiz::Region::unit_disk();
      } else if (region == "unit-square") {
        u = lypiz::Region::unit_square();
      } else if (region.rfind("disk:", 0) == 0) {
        u = lypiz::Region::disk(std::stod(region.substr(5)));
      } else {
        throw UsageError("unknown region '" + region + "'");
      }
      lypiz::MonteCarloOptions o;
      o.batches = batches;
      o.stratified = stratified;
      o.threads = p.threads();
      std::vector<lypiz::GrowthPoint> pts;
      json rows = json::array();
      std::ostringstream csv;
      csv << "# format_version=" << io::kFormatVersion << "\nk,estimate,stderr,low_confidence\n";
      for (int k = 1; k <= k_max; ++k) {
        const auto e = lypiz::mc_moment(u, beta_sq, k, samples, lypiz::stream_seed(p.seed(), static_cast<std::uint64_t>(k)), o);
        pts.push_back({k, e.estimate, e.std_error});
        rows.push_back({{"beta_sq", e.beta_sq},
                        {"k", e.k},
                        {"estimate", e.estimate},
                        {"stderr", e.std_error},
                        {"samples", e.samples},
                        {"seed", e.seed},
                        {"low_confidence", e.low_confidence}});
        csv << k << ',' << io::format_double(e.estimate) << ',' << io::format_double(e.std_error) << ','
            << (e.low_confidence ? 1 : 0) << '\n';
        std::cout << "k=" << k << " estimate=" << io::format_double(e.estimate) << " +- "
                  << io::format_double(e.std_error) << "\n";
      }
      json result = {{"moments", rows}};
      const auto tp = lypiz::tail_prediction(beta_sq);
      result["tail_prediction"] = {{"exponent", tp.exponent}, {"slow_tail_regime", tp.slow_tail_regime}};
      if (pts.size() >= 4) {
        const auto f = lypiz::moment_growth_fit(pts);
        result["growth_fit"] = {{"beta_sq_hat", f.beta_sq_hat}, {"c_hat", f.c_hat},         {"residual", f.residual},
                                {"reduced_chi_sq", f.reduced_chi_sq}, {"beta_sq_ci", {f.beta_sq_lo, f.beta_sq_hi}},
                                {"c_ci", {f.c_lo, f.c_hi}}};
        std::cout << "beta_sq_hat=" << io::format_double(f.beta_sq_hat) << " CI [" << f.beta_sq_lo << ", "
                  << f.beta_sq_hi << "]\n";
      }
      p.write("gmc_moments.csv", csv.str());
      p.write("gmc_moments.json", "gmc-moments", result);
      return 0;
    };
  }

  // dgff-check
  {
    auto& c = command("dgff-check", "empirical DGFF covariance against the lattice Green function");
    auto s = std::make_shared<std::tuple<int, double, std::size_t>>(11, 0.0, 100000);
    auto& [box, disk, samples] = *s;
    c.params->add_seed();
    c.params->add("box", box, "interior side of a square domain");
    c.params->add("disk", disk, "disk radius (overrides --box when > 0)");
    c.params->add("samples", samples, "number of DGFF draws");
    c.run = [s](Params& p) {
      auto& [box, disk, samples] = *s;
      const auto d = disk > 0.0 ? lypiz::LatticeDomain::disk(disk) : lypiz::LatticeDomain::box(box);
      const auto r = lypiz::dgff_covariance_check(d, samples, p.seed(), p.threads());
      p.write("dgff_check.json", "dgff-check",
              {{"domain", d.name()},
               {"interior_sites", d.num_interior()},
               {"samples", r.samples},
               {"frobenius_relative_error", r.frobenius_relative_error},
               {"max_diagonal_z", r.max_diagonal_z}});
      std::cout << "frobenius relative error: " << io::format_double(r.frobenius_relative_error) << "\n";
      return 0;
    };
  }

  // m-stat
  {
    auto& c = command("m-stat", "sample M_{n,r}, build its empirical MGF and look for zeros");
    auto s = std::make_shared<std::tuple<int, double, double, std::size_t, std::vector<double>, int, int, bool>>(
        8, 1.5, 1.2, 2000, std::vector<double>{-3, 3, 0, 6}, 200, 200, false);
    auto& [n, r, beta, samples, region, half_bins, resamples, snapshot] = *s;
    c.params->add_seed();
    c.params->add("n", n, "inner disk radius");
    c.params->add("r", r, "outer/inner radius ratio");
    c.params->add("beta", beta, "beta in (0, sqrt 2)");
    c.params->add("samples", samples, "number of M samples");
    c.params->add("region", region, "zero search rectangle");
    c.params->add("half_bins", half_bins, "histogram half-width B");
    c.params->add("resamples", resamples, "bootstrap resamples");
    c.params->add_flag("snapshot", snapshot, "write the first field as a binary snapshot");
    c.run = [s](Params& p) {
      auto& [n, r, beta, samples, region, half_bins, resamples, snapshot] = *s;
      const auto d = lypiz::LatticeDomain::disk(n * r);
      lypiz::GmcSampleOptions o;
      o.threads = p.threads();
      const auto mh = lypiz::sample_m_hat(d, n, r, beta, samples, p.seed(), o);
      std::vector<double> m(mh.size());
      std::ostringstream csv;
      csv << "# format_version=" << io::kFormatVersion << "\nm\n";
      for (std::size_t i = 0; i < mh.size(); ++i) {
        m[i] = mh[i].real();
        csv << io::format_double(m[i]) << '\n';
      }
      p.write("m_samples.csv", csv.str());
      const auto rep = lypiz::bootstrap_zero_report(m, rect_from(region), lypiz::stream_seed(p.seed(), samples),
                                                    resamples, half_bins);
      if (snapshot) {
        const auto f = lypiz::make_gmc_field(d, n, r, beta, p.seed());
        lypiz::write_field_snapshot(p.out("field_snapshot.bin").string(), f);
      }
      json result = {{"domain", d.name()},
                     {"sites_in_sum", lypiz::inner_disk_sites(d, n).size()},
                     {"exploratory", rep.exploratory},
                     {"zero_report", io::zero_report_to_json(rep.report)},
                     {"zero_spread", rep.zero_spread},
                     {"resamples", rep.resamples},
                     {"resamples_with_zeros", rep.resamples_with_zeros}};
      p.write("m_stat.json", "m-stat", result);
      std::cout << "zeros: " << rep.report.zeros.size() << "  verdict: " << lypiz::to_string(rep.report.verdict)
                << " (exploratory)\n";
      return 0;
    };
  }

  // villain-verify
  {
    auto& c = command("villain-verify", "Villain model end to end: distribution, zeros, PIZ check");
    auto s = std::make_shared<std::tuple<std::string, double, int, std::vector<double>, double>>(
        "", 1.0, 64, std::vector<double>{-4, 4, 0, 8}, 1e-10);
    auto& [graph, beta, grid, region, tol] = *s;
    c.params->add("graph", graph, "graph JSON file");
    c.params->add("beta", beta, "inverse temperature");
    c.params->add("grid", grid, "angular grid size N (also checked at 2N)");
    c.params->add("region", region, "re_min,re_max,im_min,im_max");
    c.params->add("tol", tol, "zero location tolerance");
    c.run = [s](Params& p) {
      auto& [graph, beta, grid, region, tol] = *s;
      lypiz::ModelSpec m{lypiz::ModelKind::Villain, load_graph(graph, p), beta, load_pinned(p)};
      const auto rect = rect_from(region);
      const auto a = lypiz::locate_zeros(lypiz::EntireMGF(lypiz::observable_distribution(m, grid)), rect, tol);
      const auto b = lypiz::locate_zeros(lypiz::EntireMGF(lypiz::observable_distribution(m, 2 * grid)), rect, tol);
      const bool piz = a.verdict == lypiz::PizVerdict::PizInRegion && b.verdict == lypiz::PizVerdict::PizInRegion;
      json result = io::zero_report_to_json(a);
      result["refined_grid_verdict"] = lypiz::to_string(b.verdict);
      if (piz) result["grid_displacement"] = lypiz::zero_displacement(a, b);
      p.write("villain_verify.json", "zero-report", result);
      std::cout << "zeros: " << a.zeros.size() << "  verdict: " << lypiz::to_string(a.verdict) << "\n";
      if (!piz) {
        std::cerr << "villain-verify: PIZ not confirmed (" << lypiz::to_string(a.verdict) << " at N=" << grid << ", "
                  << lypiz::to_string(b.verdict) << " at N=" << 2 * grid << ")\n";
        return kExitNumerical;
      }
      return 0;
    };
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << "\n" << app.help();
    return kExitUsage;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.params->resolve();
      return c.run(*c.params);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n\n" << c.app->help();
      return kExitUsage;
    } catch (const lypiz::InvalidArgument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const lypiz::NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return kExitNumerical;
    } catch (const json::exception& e) {
      std::cerr << "error: malformed JSON: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitNumerical;
    }
  }
  return kExitUsage;
}
