#include "gexp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "gexp/stopping.hpp"

namespace gexp::cli {
namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// -- small parsing helpers -----------------------------------------------------

double parse_number(std::string_view text, std::string_view context) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || std::isnan(v))
    throw PreconditionError("bad number '" + s + "' in '" + std::string(context) + "'");
  return v;
}

std::pair<std::string_view, std::string_view> split_head(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) return {spec, {}};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_keys(const json& obj, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object())
    throw PreconditionError("config section '" + std::string(section) + "' must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw PreconditionError("unknown config key '" + std::string(section) + "." + item.key() +
                              "'");
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

// -- payoffs for randomized runs ------------------------------------------------

std::vector<std::string> random_payoff_specs(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> strike(-1.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 4);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double k = strike(rng);
    switch (pick(rng)) {
      case 0: out.push_back("call:" + fmt(k)); break;
      case 1: out.push_back("put:" + fmt(k)); break;
      case 2: out.push_back("square_clamped:" + fmt(1.0 + std::abs(k))); break;
      case 3: out.push_back("abs"); break;
      default: out.push_back("identity"); break;
    }
  }
  return out;
}

// -- result documents ------------------------------------------------------------

struct Options {
  std::string command;
  std::string config_path;
  std::string out_path;
  std::string engine = "tree";
  std::string payoff;
  std::string event = "x_ge:0";
  std::string scheme;
  std::string direction;
  std::string exit_set;
  double t = 0.0;
  int n = -1;
  std::uint64_t seed = 0;
  bool timing = false;
  bool mirror = false;
};

ojson node_values(const ScenarioTree& tree, const AdaptedField& field) {
  ojson rows = ojson::array();
  const auto nodes = tree.level(field.level);
  for (std::size_t i = 0; i < field.size(); ++i) {
    ojson row;
    row["x"] = nodes[i].x;
    row["q"] = std::isnan(nodes[i].q) ? ojson(nullptr) : ojson(nodes[i].q);
    row["value"] = field[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson base_document(const Options& opt, const RunConfig& cfg) {
  ojson doc;
  doc["command"] = opt.command;
  doc["config_echo"] = cfg.to_json();
  return doc;
}

struct Outcome {
  ojson doc;
  int code = kOk;
  std::string failure;
  /// Set by commands whose document is not JSON (the convergence table).
  std::optional<std::string> text;
};

TreeOptions options_for(const RunConfig& cfg, Recombination r) {
  TreeOptions o;
  o.recombination = r;
  o.node_cap = cfg.node_cap;
  return o;
}

// -- commands --------------------------------------------------------------------

Outcome cmd_expect(const Options& opt, const RunConfig& cfg) {
  const auto p = parse_payoff(opt.payoff.empty() ? "square" : opt.payoff);
  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["engine"] = opt.engine;
  r.doc["payoff"] = p.description();
  r.doc["t"] = opt.t;
  const auto coef = cfg.coefficients();
  if (opt.engine == "pde") {
    if (opt.t != 0.0) throw PreconditionError("the pde engine evaluates t = 0 only");
    r.doc["value"] = expect_gnormal(coef, p, cfg.horizon, cfg.pde_grid());
  } else {
    const auto tree = build_tree(coef, cfg.grid(), cfg.steps, cfg.horizon,
                                 options_for(cfg, recombination_for(p)));
    const auto fields = backward_induct(tree, p);
    const auto field = condition_at(fields, tree, opt.t);
    if (field.level == 0) {
      r.doc["value"] = field[0];
    } else {
      r.doc["values"] = node_values(tree, field);
    }
    r.doc["nodes"] = tree.node_count();
  }
  r.doc["gaps"] = ojson::object();
  r.doc["iterations"] = nullptr;
  return r;
}

Outcome cmd_capacity(const Options& opt, const RunConfig& cfg) {
  const auto tree = build_tree(cfg.coefficients(), cfg.grid(), cfg.steps, cfg.horizon,
                               options_for(cfg, Recombination::Path));
  const auto event = parse_event(tree, opt.event);
  const auto c = capacity(tree, event);
  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["event"] = opt.event;
  r.doc["value"] = c.value;
  r.doc["argmax"] = c.argmax;
  r.doc["gaps"] = ojson::object();
  r.doc["iterations"] = selection_count(tree);
  return r;
}

Outcome cmd_represent(const Options& opt, const RunConfig& cfg) {
  const auto tree = build_tree(cfg.coefficients(), cfg.grid(), cfg.steps, cfg.horizon,
                               options_for(cfg, Recombination::Path));
  std::vector<std::string> specs;
  if (opt.payoff.empty()) {
    specs = random_payoff_specs(cfg.seed, 20);
  } else {
    specs.push_back(opt.payoff);
  }
  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["t"] = opt.t;
  ojson per = ojson::array();
  double max_gap = 0.0;
  for (const auto& s : specs) {
    const auto rep = verify_representation(tree, parse_payoff(s), opt.t);
    ojson row;
    row["payoff"] = s;
    row["max_gap"] = rep.max_gap;
    row["values"] = rep.lattice_values;
    per.push_back(std::move(row));
    max_gap = std::max(max_gap, rep.max_gap);
  }
  r.doc["values"] = per;
  r.doc["gaps"] = {{"max_gap", max_gap}};
  r.doc["iterations"] = specs.size();
  if (!(max_gap <= 1e-12)) {
    r.code = kVerification;
    r.failure = "representation gap " + fmt(max_gap) + " exceeds 1e-12";
  }
  return r;
}

Outcome cmd_extend(const Options& opt, const RunConfig& cfg) {
  if (opt.scheme.empty()) throw PreconditionError("extend needs --scheme");
  const auto scheme = parse_scheme(opt.scheme);
  Direction dir = scheme.direction();
  if (!opt.direction.empty()) {
    if (opt.direction == "down") {
      dir = Direction::Down;
    } else if (opt.direction == "up") {
      dir = Direction::Up;
    } else {
      throw PreconditionError("direction must be down or up");
    }
  }
  if (dir != scheme.direction())
    throw PreconditionError("scheme '" + opt.scheme + "' is not a " + opt.direction + " scheme");

  const auto coef = cfg.coefficients();
  std::optional<ScenarioTree> tree;
  std::unique_ptr<Engine> engine;
  StopRule stop = cfg.tree_stop();
  if (opt.engine == "pde") {
    engine = std::make_unique<PdeEngine>(coef, cfg.pde_grid(), cfg.horizon);
    stop = cfg.pde_stop();
  } else {
    const auto rec =
        scheme.at(1).needs_qv() ? Recombination::State : Recombination::Position;
    tree.emplace(build_tree(coef, cfg.grid(), cfg.steps, cfg.horizon, options_for(cfg, rec)));
    engine = std::make_unique<TreeEngine>(*tree);
  }

  ExtensionResult res;
  if (dir == Direction::Down) {
    res = opt.mirror ? dominated_extend(DominatedKind::Mirror, *engine, scheme, opt.t, stop)
                     : extend_down(*engine, scheme, opt.t, stop);
  } else {
    auto lifted = DoubleScheme::lift(scheme);
    if (opt.mirror) {
      lifted.with_negated_target(scheme.negated());
      res = dominated_extend(DominatedKind::Mirror, *engine, lifted, opt.t, stop);
    } else {
      res = extend_up(*engine, lifted, opt.t, stop);
    }
  }

  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["engine"] = engine->name();
  r.doc["scheme"] = scheme.description();
  r.doc["direction"] = dir == Direction::Down ? "down" : "up";
  r.doc["mirror"] = opt.mirror;
  r.doc["t"] = opt.t;
  if (res.limit.level == 0) {
    r.doc["value"] = res.limit[0];
  } else {
    r.doc["values"] = node_values(*tree, res.limit);
  }
  ojson cert = ojson::array();
  for (double c : res.cauchy_certificate) cert.push_back(std::isinf(c) ? ojson(nullptr) : ojson(c));
  r.doc["gaps"] = {{"cauchy", cert}};
  r.doc["indices"] = res.indices;
  r.doc["converged"] = res.converged;
  r.doc["iterations"] = res.iterations;
  if (!res.converged) {
    r.code = kPrecondition;
    r.failure = "no convergence within max_k = " + std::to_string(stop.max_k);
  }
  return r;
}

Outcome cmd_stop(const Options& opt, const RunConfig& cfg) {
  const auto coef = cfg.coefficients();
  if (!(coef.sigma_low_sq() > 0.0))
    throw PreconditionError("optional stopping needs sigma_low_sq > 0");
  const auto tree = build_tree(coef, cfg.grid(), cfg.steps, cfg.horizon,
                               options_for(cfg, Recombination::Path));
  std::string set_spec = opt.exit_set;
  if (set_spec.rfind("exit:", 0) == 0) set_spec.erase(0, 5);
  if (set_spec.empty()) {
    const double b = std::sqrt(coef.sigma_high_sq()) * std::sqrt(cfg.horizon * tree.dt()) * 3.0;
    set_spec = "[" + fmt(-b) + "," + fmt(b) + "]";
  }
  const auto set = parse_closed_set(set_spec);
  const auto xi = parse_payoff(opt.payoff.empty() ? "call:0" : opt.payoff);
  const int n_max = opt.n < 0 ? 8 : opt.n;

  const auto tau = exit_time(tree, set, cfg.horizon);
  const auto sigma = tau.min(tree.steps() / 2);
  const auto report = optional_stopping_check(tree, xi, sigma, tau);

  // 0 <= tau^n - tau ^ T <= T 2^-n, as integers: with tau = k T / K and
  // tau^n = i T / 2^n, 0 <= i K - k 2^n <= K.
  bool dyadic_ok = true;
  const auto big_k = static_cast<std::int64_t>(tau.horizon_level());
  for (int n = 0; n <= n_max && dyadic_ok; ++n) {
    const auto times = dyadic_times(tau, n);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const auto d = static_cast<std::int64_t>(times[j]) * big_k -
                     static_cast<std::int64_t>(tau.level(j)) * (std::int64_t{1} << n);
      if (d < 0 || d > big_k) {
        dyadic_ok = false;
        break;
      }
    }
  }
  const auto conv = dyadic_convergence(tree, xi, tau, n_max);
  bool conv_monotone = true;
  for (std::size_t i = 1; i < conv.size(); ++i)
    if (conv[i] > conv[i - 1] + 1e-12) conv_monotone = false;

  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["payoff"] = xi.description();
  r.doc["exit_set"] = set.to_string();
  r.doc["sigma_level"] = tree.steps() / 2;
  r.doc["value"] = report.m0;
  r.doc["gaps"] = {{"optional_stopping", report.max_gap},
                   {"sigma", report.sigma_gap},
                   {"levels", report.level_gaps},
                   {"dyadic", conv}};
  r.doc["dyadic_bounds_exact"] = dyadic_ok;
  r.doc["dyadic_monotone"] = conv_monotone;
  r.doc["iterations"] = n_max + 1;

  std::string fail;
  if (!(report.max_gap <= 1e-12) || !(report.sigma_gap <= 1e-12))
    fail = "optional stopping gap " + fmt(std::max(report.max_gap, report.sigma_gap));
  else if (!dyadic_ok)
    fail = "dyadic times leave [tau, tau + T 2^-n]";
  else if (!conv_monotone)
    fail = "dyadic stopped values do not converge monotonically";
  if (!fail.empty()) {
    r.code = kVerification;
    r.failure = fail;
  }
  return r;
}

Outcome cmd_counterexample(const Options& opt, const RunConfig& cfg) {
  const int n = opt.n < 0 ? 4 : opt.n;
  if (n < 1) throw PreconditionError("--n must be >= 1");
  const auto coef = cfg.coefficients();
  VolatilityGrid grid = cfg.grid();
  if (cfg.grid_volatilities.empty() && cfg.grid_variances.empty()) {
    if (coef.is_classical()) {
      grid = VolatilityGrid::uniform(coef, 1);
    } else {
      const double mid = coef.sigma_high_sq() - 1.0 / (2.0 * n);
      grid = VolatilityGrid::from_variances(coef, {coef.sigma_low_sq(), mid, coef.sigma_high_sq()});
    }
  }
  const auto [x, x_tilde] = counterexample_run(coef, grid, n, cfg.steps, cfg.tree_stop());
  Outcome r;
  r.doc = base_document(opt, cfg);
  r.doc["n"] = n;
  r.doc["values"] = {x, x_tilde};
  const double expected = coef.is_classical() ? 0.0 : -1.0;
  r.doc["gaps"] = {{"x_n", std::abs(x - expected)}, {"x_tilde_n", std::abs(x_tilde)}};
  r.doc["iterations"] = nullptr;
  if (x != expected || x_tilde != 0.0) {
    r.code = kVerification;
    r.failure = "expected (" + fmt(expected) + ", 0), got (" + fmt(x) + ", " + fmt(x_tilde) + ")";
  }
  return r;
}

Outcome cmd_convergence(const Options& opt, const RunConfig& cfg) {
  const auto p = parse_payoff(opt.payoff.empty() ? "call:0" : opt.payoff);
  if (p.needs_path() || p.kind() == PayoffKind::Cylinder)
    throw PreconditionError("convergence needs a terminal payoff");
  const auto coef = cfg.coefficients();
  const auto grid = cfg.grid();
  if (cfg.sweep_steps.empty() || cfg.sweep_dx.empty())
    throw PreconditionError("convergence needs non-empty steps and dx sweeps");

  using Clock = std::chrono::steady_clock;
  struct Row {
    std::string resolution;
    double value;
    double ms;
  };
  auto timed = [](const std::function<double()>& f, double& ms) {
    const auto start = Clock::now();
    const double v = f();
    ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return v;
  };
  auto tree_value = [&](int steps) {
    return expect(coef, grid, steps, cfg.horizon, p, cfg.node_cap);
  };
  auto pde_value = [&](double dx) { return expect_gnormal(coef, p, cfg.horizon, cfg.pde_grid(dx)); };

  // The sweep of one engine is measured against the other engine at its
  // finest resolution.
  std::vector<Row> rows;
  double reference = 0.0;
  const bool tree_sweep = opt.engine != "pde";
  if (tree_sweep) {
    auto steps = cfg.sweep_steps;
    std::sort(steps.begin(), steps.end());
    reference = pde_value(cfg.dx);
    for (int s : steps) {
      Row row{std::to_string(s), 0.0, 0.0};
      row.value = timed([&] { return tree_value(s); }, row.ms);
      rows.push_back(row);
    }
  } else {
    auto dxs = cfg.sweep_dx;
    std::sort(dxs.begin(), dxs.end(), std::greater<>());
    reference = tree_value(*std::max_element(cfg.sweep_steps.begin(), cfg.sweep_steps.end()));
    for (double dx : dxs) {
      Row row{fmt(dx), 0.0, 0.0};
      row.value = timed([&] { return pde_value(dx); }, row.ms);
      rows.push_back(row);
    }
  }

  std::ostringstream csv;
  csv << "method,resolution,value,gap,runtime_ms\n";
  bool monotone = true;
  double prev = INFINITY;
  for (const auto& row : rows) {
    const double gap = std::abs(row.value - reference);
    if (gap > prev) monotone = false;
    prev = gap;
    csv << (tree_sweep ? "tree" : "pde") << ',' << row.resolution << ',' << fmt(row.value) << ','
        << fmt(gap) << ',';
    if (opt.timing) csv << fmt(row.ms);
    csv << '\n';
  }
  Outcome r;
  r.text = csv.str();
  if (!monotone) {
    r.code = kVerification;
    r.failure = "convergence gaps are not monotone";
  }
  return r;
}

using Command = Outcome (*)(const Options&, const RunConfig&);

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table{
      {"expect", cmd_expect},         {"capacity", cmd_capacity},
      {"represent", cmd_represent},   {"extend", cmd_extend},
      {"stop", cmd_stop},             {"counterexample", cmd_counterexample},
      {"convergence", cmd_convergence},
  };
  return table;
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw PreconditionError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(doc);
}

}  // namespace

// -- RunConfig -------------------------------------------------------------------

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  try {
    check_keys(doc, "config", {"coef", "grid", "tree", "pde", "extension", "convergence", "seed"});
    if (doc.contains("coef")) {
      const auto& s = doc["coef"];
      check_keys(s, "coef", {"sigma_low_sq", "sigma_high_sq"});
      read(s, "sigma_low_sq", c.sigma_low_sq);
      read(s, "sigma_high_sq", c.sigma_high_sq);
    }
    if (doc.contains("grid")) {
      const auto& s = doc["grid"];
      check_keys(s, "grid", {"m", "volatilities", "variances"});
      if (s.size() > 1) throw PreconditionError("grid takes one of m, volatilities, variances");
      read(s, "m", c.grid_m);
      read(s, "volatilities", c.grid_volatilities);
      read(s, "variances", c.grid_variances);
    }
    if (doc.contains("tree")) {
      const auto& s = doc["tree"];
      check_keys(s, "tree", {"N", "T", "node_cap"});
      read(s, "N", c.steps);
      read(s, "T", c.horizon);
      read(s, "node_cap", c.node_cap);
    }
    if (doc.contains("pde")) {
      const auto& s = doc["pde"];
      check_keys(s, "pde", {"x_min", "x_max", "dx", "dt"});
      read(s, "x_min", c.x_min);
      read(s, "x_max", c.x_max);
      read(s, "dx", c.dx);
      read(s, "dt", c.dt);
    }
    if (doc.contains("extension")) {
      const auto& s = doc["extension"];
      check_keys(s, "extension", {"tolerance", "pde_tolerance", "max_k"});
      read(s, "tolerance", c.tree_tolerance);
      read(s, "pde_tolerance", c.pde_tolerance);
      read(s, "max_k", c.max_k);
    }
    if (doc.contains("convergence")) {
      const auto& s = doc["convergence"];
      check_keys(s, "convergence", {"steps", "dx"});
      read(s, "steps", c.sweep_steps);
      read(s, "dx", c.sweep_dx);
    }
    read(doc, "seed", c.seed);
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("config: ") + e.what());
  }

  // Re-validate everything the engines would check later.
  (void)c.coefficients();
  (void)c.grid();
  if (c.steps < 1) throw PreconditionError("tree.N must be >= 1");
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon))
    throw PreconditionError("tree.T must be positive");
  if (c.node_cap < 1) throw PreconditionError("tree.node_cap must be positive");
  if (!(c.tree_tolerance > 0.0) || !(c.pde_tolerance > 0.0))
    throw PreconditionError("extension tolerances must be positive");
  if (c.max_k < 1) throw PreconditionError("extension.max_k must be >= 1");
  (void)c.pde_grid();
  for (int s : c.sweep_steps)
    if (s < 1) throw PreconditionError("convergence.steps entries must be >= 1");
  for (double dx : c.sweep_dx) (void)c.pde_grid(dx);
  return c;
}

ojson RunConfig::to_json() const {
  ojson j;
  j["coef"] = {{"sigma_low_sq", sigma_low_sq}, {"sigma_high_sq", sigma_high_sq}};
  if (!grid_volatilities.empty()) {
    j["grid"] = {{"volatilities", grid_volatilities}};
  } else if (!grid_variances.empty()) {
    j["grid"] = {{"variances", grid_variances}};
  } else {
    j["grid"] = {{"m", grid_m}};
  }
  j["tree"] = {{"N", steps}, {"T", horizon}, {"node_cap", node_cap}};
  const auto g = pde_grid();
  j["pde"] = {{"x_min", g.x_min()}, {"x_max", g.x_max()}, {"dx", g.dx()}, {"dt", g.dt()}};
  j["extension"] = {{"tolerance", tree_tolerance}, {"pde_tolerance", pde_tolerance},
                    {"max_k", max_k}};
  j["convergence"] = {{"steps", sweep_steps}, {"dx", sweep_dx}};
  j["seed"] = seed;
  return j;
}

GCoefficients RunConfig::coefficients() const { return GCoefficients(sigma_low_sq, sigma_high_sq); }

VolatilityGrid RunConfig::grid() const {
  const auto coef = coefficients();
  if (!grid_volatilities.empty()) return VolatilityGrid::from_volatilities(coef, grid_volatilities);
  if (!grid_variances.empty()) return VolatilityGrid::from_variances(coef, grid_variances);
  return VolatilityGrid::uniform(coef, grid_m);
}

Grid1D RunConfig::pde_grid() const { return pde_grid(dx); }

Grid1D RunConfig::pde_grid(double spacing) const {
  const auto coef = coefficients();
  double lo = x_min, hi = x_max;
  if (lo == 0.0 && hi == 0.0) {
    const double half = std::max(1.0, std::ceil(8.0 * std::sqrt(coef.sigma_high_sq() * horizon)));
    lo = -half;
    hi = half;
  }
  double step = dt;
  if (step == 0.0) step = coef.sigma_high_sq() > 0.0 ? spacing * spacing / coef.sigma_high_sq() : 1.0;
  Grid1D g(lo, hi, spacing, step);
  if (!g.satisfies_cfl(coef))
    throw PreconditionError("pde grid violates the CFL condition dt sigma_high_sq / dx^2 <= 1");
  const double need = 8.0 * std::sqrt(coef.sigma_high_sq() * horizon);
  if (std::min(-lo, hi) < need)
    throw PreconditionError("pde domain half-width " + fmt(std::min(-lo, hi)) +
                            " is below 8 sigma_high sqrt(T) = " + fmt(need));
  return g;
}

// -- spec parsers ----------------------------------------------------------------

Payoff parse_payoff(std::string_view spec) {
  const auto [head, arg] = split_head(spec);
  auto need_arg = [&] {
    if (arg.empty()) throw PreconditionError("payoff '" + std::string(spec) + "' needs an argument");
  };
  auto no_arg = [&] {
    if (!arg.empty() || spec.find(':') != std::string_view::npos)
      throw PreconditionError("payoff '" + std::string(head) + "' takes no argument");
  };
  if (head == "neg") {
    need_arg();
    return -parse_payoff(arg);
  }
  if (head == "call") return need_arg(), Payoff::call(parse_number(arg, spec));
  if (head == "put") return need_arg(), Payoff::put(parse_number(arg, spec));
  if (head == "digital_ge") return need_arg(), Payoff::digital_ge(parse_number(arg, spec));
  if (head == "square_clamped") return need_arg(), Payoff::square_clamped(parse_number(arg, spec));
  if (head == "const") return need_arg(), Payoff::constant(parse_number(arg, spec));
  if (head == "qv_band") {
    need_arg();
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos)
      throw PreconditionError("qv_band needs lo,hi in '" + std::string(spec) + "'");
    return Payoff::qv_band(parse_number(arg.substr(0, comma), spec),
                           parse_number(arg.substr(comma + 1), spec));
  }
  if (head == "square") return no_arg(), Payoff::square();
  if (head == "identity") return no_arg(), Payoff::identity();
  if (head == "abs") return no_arg(), Payoff::abs();
  if (head == "qv_identity") return no_arg(), Payoff::qv_identity();
  throw PreconditionError("unknown payoff '" + std::string(spec) + "'");
}

TreeEvent parse_event(const ScenarioTree& tree, std::string_view spec) {
  const auto [head, arg] = split_head(spec);
  const int n = tree.steps();
  if (head == "all" && arg.empty()) return TreeEvent::all(tree, n);
  if (head == "none" && arg.empty()) return TreeEvent::none(tree, n);
  const auto nodes = tree.level(n);
  auto by_x = [&](const std::function<bool(double)>& pred) {
    return TreeEvent::from_nodes(tree, n, [&](std::size_t i) { return pred(nodes[i].x); });
  };
  auto by_q = [&](const std::function<bool(double)>& pred) {
    return TreeEvent::from_nodes(tree, n, [&](std::size_t i) { return pred(nodes[i].q); });
  };
  if (head == "x_ge") {
    const double a = parse_number(arg, spec);
    return by_x([a](double x) { return x >= a; });
  }
  if (head == "x_gt") {
    const double a = parse_number(arg, spec);
    return by_x([a](double x) { return x > a; });
  }
  if (head == "x_in") {
    const auto s = parse_closed_set(arg);
    return by_x([&s](double x) { return s.contains(x); });
  }
  if (head == "x_in_open") {
    const auto s = parse_open_set(arg);
    return by_x([&s](double x) { return s.contains(x); });
  }
  if (head == "qv_in") {
    const auto s = parse_closed_set(arg);
    return by_q([&s](double q) { return s.contains(q); });
  }
  if (head == "qv_in_open") {
    const auto s = parse_open_set(arg);
    return by_q([&s](double q) { return s.contains(q); });
  }
  throw PreconditionError("unknown event '" + std::string(spec) + "'");
}

MonotoneScheme parse_scheme(std::string_view spec) {
  auto rest = spec;
  Coordinate coord = Coordinate::Position;
  if (rest.substr(0, 3) == "qv:") {
    coord = Coordinate::QuadVar;
    rest.remove_prefix(3);
  }
  if (rest.substr(0, 15) == "envdown:closed:")
    return MonotoneScheme::closed_envelopes(parse_closed_set(rest.substr(15)), coord);
  if (rest.substr(0, 11) == "envup:open:")
    return MonotoneScheme::open_envelopes(parse_open_set(rest.substr(11)), coord);
  throw PreconditionError("unknown scheme '" + std::string(spec) + "'");
}

// -- entry point -----------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Sublinear expectations on scenario trees and the G-heat equation", "gexp"};
  app.add_option("command", opt.command,
                 "expect | capacity | represent | extend | stop | counterexample | convergence")
      ->required();
  app.add_option("--config", opt.config_path, "JSON run configuration");
  app.add_option("--out", opt.out_path, "write the result document here instead of stdout");
  app.add_option("--engine", opt.engine, "tree or pde")->check(CLI::IsMember({"tree", "pde"}));
  app.add_option("--payoff", opt.payoff, "payoff spec, e.g. call:1.0, square, qv_band:0.75,1");
  app.add_option("--t", opt.t, "conditioning time (a lattice time)");
  app.add_option("--n", opt.n, "counterexample index / max dyadic level");
  auto* seed_opt = app.add_option("--seed", opt.seed, "seed for randomized suites (overrides config)");
  app.add_option("--event", opt.event, "event spec for capacity, e.g. x_ge:0, qv_in:[0.5,1]");
  app.add_option("--scheme", opt.scheme, "scheme spec, e.g. envdown:closed:[0,inf)");
  app.add_option("--direction", opt.direction, "down or up")
      ->check(CLI::IsMember({"down", "up"}));
  app.add_option("--exit", opt.exit_set, "exit set for stop, e.g. exit:[-1,1]");
  app.add_flag("--timing", opt.timing, "record runtime_ms");
  app.add_flag("--mirror", opt.mirror, "use the mirror expectation -E[-X]");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "gexp: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  const auto it = commands().find(opt.command);
  if (it == commands().end()) {
    err << "gexp: unknown command '" << opt.command << "'\n";
    return kUsage;
  }

  auto emit = [&](const std::string& text) -> bool {
    if (opt.out_path.empty()) {
      out << text;
      return true;
    }
    std::ofstream f(opt.out_path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
  };
  auto error_document = [&](const char* status, const std::string& what) {
    ojson doc;
    doc["command"] = opt.command;
    doc["status"] = status;
    doc["error"] = what;
    emit(doc.dump(2) + "\n");
  };

  const auto start = std::chrono::steady_clock::now();
  Outcome result;
  try {
    RunConfig cfg = load_config(opt.config_path);
    if (seed_opt->count() > 0) cfg.seed = opt.seed;
    result = it->second(opt, cfg);
  } catch (const VerificationError& e) {
    err << "gexp: verification failed: " << e.what() << "\n";
    error_document("verification_failed", e.what());
    return kVerification;
  } catch (const PreconditionError& e) {
    err << "gexp: " << e.what() << "\n";
    error_document("precondition_failed", e.what());
    return kPrecondition;
  }

  std::string text;
  if (result.text) {
    text = *result.text;
  } else {
    if (opt.timing) {
      result.doc["runtime_ms"] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
    } else {
      result.doc["runtime_ms"] = nullptr;
    }
    result.doc["status"] = result.code == kOk ? "ok"
                           : result.code == kVerification ? "verification_failed"
                                                          : "precondition_failed";
    text = result.doc.dump(2) + "\n";
  }
  if (!emit(text)) {
    err << "gexp: cannot write '" << opt.out_path << "'\n";
    return kPrecondition;
  }
  if (result.code != kOk) err << "gexp: " << result.failure << "\n";
  return result.code;
}

}  // namespace gexp::cli
