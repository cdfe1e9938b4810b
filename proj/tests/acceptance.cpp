// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria (0 when all pass).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gexp/cli.hpp"
#include "gexp/extension.hpp"
#include "gexp/measures.hpp"
#include "gexp/pde.hpp"
#include "gexp/stopping.hpp"
#include "oracles.hpp"

using namespace gexp;

namespace {

// Tolerances, pinned.
constexpr double kExact = 1e-12;
constexpr double kPdeTol = 5e-3;
constexpr double kCollapseTol = 5e-3;
constexpr double kStabilize = 1e-9;
constexpr double kCapacityCross = 1e-2;
constexpr double kDyadicTol = 1e-2;
constexpr double kCrossEngine = 1e-2;
constexpr double kClassicalMs = 1000.0;
constexpr double kCollapseMs = 5000.0;
constexpr double kRepresentMs = 10000.0;

const GCoefficients kCoef(0.25, 1.0);
const GCoefficients kClassical(1.0, 1.0);

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

template <class F>
double timed(double& ms, F&& f) {
  const auto start = std::chrono::steady_clock::now();
  const double v = f();
  ms = ms_since(start);
  return v;
}

const VolatilityGrid& grid_for(std::size_t m) {
  static const std::map<std::size_t, VolatilityGrid> grids{
      {1, VolatilityGrid::uniform(kClassical, 1)},
      {2, VolatilityGrid::uniform(kCoef, 2)},
      {3, VolatilityGrid::uniform(kCoef, 3)},
  };
  return grids.at(m);
}

const GCoefficients& coef_for(std::size_t m) { return m == 1 ? kClassical : kCoef; }

ScenarioTree tree_of(std::size_t m, int n, Recombination r) {
  return build_tree(coef_for(m), grid_for(m), n, 1.0, {r});
}

double max_abs_diff(const AdaptedField& a, const AdaptedField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("gexp_accept_" + name + ".json");
  std::ofstream(path) << body;
  return path.string();
}

int cli_code(std::vector<std::string> args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

std::string cli_out(std::vector<std::string> args, int& code) {
  std::ostringstream out, err;
  code = cli::run(args, out, err);
  return out.str();
}

// ----------------------------------------------------------------------------

Verdict classical_reduction() {
  Verdict v;
  double tree_ms = 0.0, pde_ms = 0.0;
  const double tv = timed(tree_ms, [] {
    return expect(kClassical, grid_for(1), 64, 1.0, Payoff::square());
  });
  const double pv = timed(pde_ms, [] {
    return expect_gnormal(kClassical, Payoff::square(), 1.0,
                          Grid1D::cfl_tight(kClassical, 8.0, 0.02));
  });
  v.require(std::abs(tv - 1.0) <= kExact, "tree |v-1| = " + num(std::abs(tv - 1.0)));
  v.require(std::abs(pv - 1.0) <= kPdeTol, "pde |v-1| = " + num(std::abs(pv - 1.0)));
  v.require(tree_ms < kClassicalMs, "tree " + num(tree_ms) + " ms");
  v.require(pde_ms < kClassicalMs, "pde " + num(pde_ms) + " ms");
  return v;
}

Verdict convex_concave_collapse() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const auto plus = [](double x) { return std::max(x, 0.0); };
  const double hi = oracle::gaussian(1.0, plus);
  const double lo = -oracle::gaussian(0.5, plus);
  v.require(std::abs(hi - 0.398942) <= 1e-6 && std::abs(lo + 0.199471) <= 1e-6,
            "oracle (" + num(hi) + ", " + num(lo) + ")");

  const auto grid = Grid1D::cfl_tight(kCoef, 8.0, 0.02);
  const auto call = Payoff::call(0.0);
  const double pde_hi = expect_gnormal(kCoef, call, 1.0, grid);
  const double pde_lo = expect_gnormal(kCoef, -call, 1.0, grid);
  const auto tree = build_tree(kCoef, grid_for(2), 256, 1.0, {recombination_for(call)});
  const double tree_hi = expect(tree, call);
  const double tree_lo = expect(tree, -call);
  v.require(std::abs(pde_hi - hi) <= kCollapseTol, "pde x+ gap " + num(std::abs(pde_hi - hi)));
  v.require(std::abs(tree_hi - hi) <= kCollapseTol, "tree x+ gap " + num(std::abs(tree_hi - hi)));
  v.require(std::abs(pde_lo - lo) <= kCollapseTol, "pde -x+ gap " + num(std::abs(pde_lo - lo)));
  v.require(std::abs(tree_lo - lo) <= kCollapseTol, "tree -x+ gap " + num(std::abs(tree_lo - lo)));
  const double ms = ms_since(start);
  v.require(ms < kCollapseMs, num(ms) + " ms");
  return v;
}

Verdict axiom_suite() {
  Verdict v;
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> steps(1, 8);
  std::uniform_int_distribution<int> width(1, 3);
  std::uniform_real_distribution<double> lam(0.0, 3.0), cst(-2.0, 2.0);
  double mono = 0.0, sub = 0.0, homog = 0.0, cons = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto m = static_cast<std::size_t>(width(rng));
    const auto tree = tree_of(m, steps(rng), Recombination::State);
    const auto x = oracle::random_lipschitz(rng).payoff;
    const auto y = oracle::random_lipschitz(rng).payoff;
    const double l = lam(rng), c = cst(rng);
    const auto fx = backward_induct(tree, x);
    const auto fy = backward_induct(tree, y);
    const auto fmax = backward_induct(tree, pmax(x, y));
    const auto fsum = backward_induct(tree, x + y);
    const auto fl = backward_induct(tree, l * x);
    const auto fc = backward_induct(tree, Payoff::constant(c));
    const auto fxc = backward_induct(tree, x + c);
    for (std::size_t k = 0; k < fx.size(); ++k) {
      for (std::size_t i = 0; i < fx[k].size(); ++i) {
        mono = std::max(mono, std::max(fx[k][i], fy[k][i]) - fmax[k][i]);
        sub = std::max(sub, fsum[k][i] - fx[k][i] - fy[k][i]);
        homog = std::max(homog, std::abs(fl[k][i] - l * fx[k][i]));
        cons = std::max(cons, std::max(std::abs(fc[k][i] - c),
                                       std::abs(fxc[k][i] - fx[k][i] - c)));
      }
    }
  }
  v.require(mono <= kExact, "monotonicity " + num(mono));
  v.require(sub <= kExact, "subadditivity " + num(sub));
  v.require(homog <= kExact, "homogeneity " + num(homog));
  v.require(cons <= kExact, "constants " + num(cons));
  return v;
}

Verdict tower_property() {
  Verdict v;
  std::mt19937_64 rng(102);
  double gap = 0.0;
  std::size_t pairs = 0;
  for (std::size_t m : {1u, 2u, 3u}) {
    for (int n = 1; n <= 8; ++n) {
      // s <= t on the recombined tree; s > t (where E_s keeps an F_t field)
      // on the path tree, which is only affordable for small trees.
      const auto tree = tree_of(m, n, Recombination::State);
      const auto p = oracle::random_lipschitz(rng).payoff + Payoff::qv_identity();
      const auto fields = backward_induct(tree, p);
      for (int t = 0; t <= n; ++t) {
        const auto re = induct(tree, fields[static_cast<std::size_t>(t)]);
        for (int s = 0; s <= t; ++s, ++pairs)
          gap = std::max(gap, max_abs_diff(re[static_cast<std::size_t>(s)],
                                           fields[static_cast<std::size_t>(s)]));
      }
      if (std::pow(2.0 * static_cast<double>(m), n) > 70000.0) continue;
      const auto ptree = tree_of(m, n, Recombination::Path);
      const auto pf = backward_induct(ptree, p);
      for (int t = 0; t < n; ++t) {
        const auto lifted = induct(ptree, lift_to_terminal(ptree, pf[static_cast<std::size_t>(t)]));
        for (int s = t + 1; s <= n; ++s, ++pairs) {
          const auto& fs = lifted[static_cast<std::size_t>(s)];
          for (std::size_t node = 0; node < fs.size(); ++node)
            gap = std::max(gap, std::abs(fs[node] - pf[static_cast<std::size_t>(t)]
                                                       [ptree.ancestor(s, node, t)]));
        }
      }
    }
  }
  v.require(gap <= kExact, std::to_string(pairs) + " (s,t) pairs, max gap " + num(gap));
  return v;
}

Verdict representation_oracle() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(103);
  double gap = 0.0;
  std::size_t runs = 0;
  for (std::size_t m : {1u, 2u}) {
    for (int n = 1; n <= 3; ++n) {
      const auto tree = tree_of(m, n, Recombination::Path);
      for (int rep = 0; rep < 20; ++rep) {
        const auto p = oracle::random_lipschitz(rng).payoff;
        for (int k = 0; k <= n; ++k, ++runs)
          gap = std::max(gap, verify_representation(tree, p, tree.time(k)).max_gap);
      }
    }
  }
  const double ms = ms_since(start);
  v.require(gap <= kExact, std::to_string(runs) + " runs, max gap " + num(gap));
  v.require(ms < kRepresentMs, num(ms) + " ms");
  return v;
}

VolSelection random_selection(const ScenarioTree& tree, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(tree.grid().size()) - 1);
  VolSelection s;
  for (int k = 0; k < tree.steps(); ++k) {
    s.choice.emplace_back(tree.level_size(k));
    for (auto& c : s.choice.back()) c = pick(rng);
  }
  return s;
}

Verdict pasting() {
  Verdict v;
  std::mt19937_64 rng(104);
  std::uniform_int_distribution<int> part(0, 2);
  double gap = 0.0;
  std::size_t checked = 0;
  for (std::size_t m : {2u, 3u}) {
    for (int n = 1; n <= 3; ++n) {
      const auto tree = tree_of(m, n, Recombination::Path);
      for (int t = 0; t <= n; ++t) {
        for (int rep = 0; rep < 5; ++rep) {
          const auto base = random_selection(tree, rng);
          std::vector<VolSelection> sels(3, base);
          for (auto& s : sels) {
            const auto r = random_selection(tree, rng);
            for (int k = t; k < n; ++k)
              s.choice[static_cast<std::size_t>(k)] = r.choice[static_cast<std::size_t>(k)];
          }
          std::vector<int> owner(tree.level_size(t));
          for (auto& o : owner) o = part(rng);
          std::vector<std::pair<TreeEvent, VolSelection>> parts;
          for (int i = 0; i < 3; ++i)
            parts.emplace_back(
                TreeEvent::from_nodes(tree, t, [&](std::size_t x) { return owner[x] == i; }),
                sels[static_cast<std::size_t>(i)]);
          const auto pasted = paste(tree, t, parts);
          const auto terminal = terminal_field(tree, oracle::random_lipschitz(rng).payoff);
          const auto fp = classical_fields(tree, pasted, terminal);
          std::vector<std::vector<AdaptedField>> fi;
          for (const auto& s : sels) fi.push_back(classical_fields(tree, s, terminal));
          // From t on, every node follows the part owning its level-t ancestor.
          for (int k = t; k <= n; ++k) {
            for (std::size_t x = 0; x < tree.level_size(k); ++x) {
              const double got = fp[static_cast<std::size_t>(k)][x];
              if (std::isnan(got)) continue;
              const auto i = static_cast<std::size_t>(owner[tree.ancestor(k, x, t)]);
              gap = std::max(gap, std::abs(got - fi[i][static_cast<std::size_t>(k)][x]));
              ++checked;
            }
          }
        }
      }
    }
  }
  v.require(gap <= kExact && checked > 0,
            std::to_string(checked) + " node values, max gap " + num(gap));
  return v;
}

Verdict capacity_laws() {
  Verdict v;
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto tree = tree_of(2, 3, Recombination::Path);
  const std::size_t size = tree.level_size(3);
  int monotone_fail = 0, subadd_fail = 0, limit_fail = 0, closed_fail = 0;
  double lattice_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    // A_1 within A_2 within ... within A_5, by adding random nodes.
    std::vector<std::vector<bool>> chain(5, std::vector<bool>(size));
    const double p = 0.05 + 0.1 * u(rng);
    for (std::size_t j = 0; j < size; ++j) {
      bool in = u(rng) < p;
      for (auto& a : chain) {
        in = in || u(rng) < p;
        a[j] = in;
      }
    }
    std::vector<double> c;
    for (const auto& a : chain) c.push_back(capacity(tree, TreeEvent(3, a)).value);
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(c[i - 1] <= c[i])) ++monotone_fail;

    // (2): the union of disjoint slices of the chain.
    std::vector<TreeEvent> slices;
    slices.emplace_back(3, chain[0]);
    for (std::size_t i = 1; i < chain.size(); ++i)
      slices.push_back(TreeEvent(3, chain[i]) & ~TreeEvent(3, chain[i - 1]));
    double sum = 0.0;
    for (const auto& s : slices) sum += capacity(tree, s).value;
    if (!(c.back() <= sum)) ++subadd_fail;

    // (3) on a finite chain: the last capacity is the capacity of the union.
    TreeEvent uni = slices[0];
    for (const auto& s : slices) uni = uni | s;
    if (capacity(tree, uni).value != c.back()) ++limit_fail;

    // (4) for decreasing closed position sets F_n = [a - 1/n, b + 1/n].
    const double a = -1.0 + u(rng), b = a + u(rng);
    double prev = INFINITY;
    const auto& last = tree.level(3);
    // On a finite tree F_n selects the same nodes as F once 1/n is below the
    // distance from F to the nearest node outside it.
    double d_min = INFINITY;
    for (const auto& node : tree.level(3))
      if (node.x < a || node.x > b) d_min = std::min(d_min, std::max(a - node.x, node.x - b));
    for (int n = 1;; n *= 2) {
      const auto e = TreeEvent::from_nodes(tree, 3, [&](std::size_t j) {
        return last[j].x >= a - 1.0 / n && last[j].x <= b + 1.0 / n;
      });
      const double cn = capacity(tree, e).value;
      if (cn > prev) ++closed_fail;
      prev = cn;
      if (1.0 / n < d_min) break;
    }
    const auto f = TreeEvent::from_nodes(
        tree, 3, [&](std::size_t j) { return last[j].x >= a && last[j].x <= b; });
    if (prev != capacity(tree, f).value) ++closed_fail;

    // Enumeration agrees with the lattice value of the indicator.
    AdaptedField af{3, std::vector<double>(size)};
    for (std::size_t j = 0; j < size; ++j) af.values[j] = chain[2][j] ? 1.0 : 0.0;
    lattice_gap = std::max(lattice_gap, std::abs(induct(tree, af)[0][0] - c[2]));
  }
  v.require(monotone_fail == 0, "(1) violations " + std::to_string(monotone_fail));
  v.require(subadd_fail == 0, "(2) violations " + std::to_string(subadd_fail));
  v.require(limit_fail == 0, "(3) violations " + std::to_string(limit_fail));
  v.require(closed_fail == 0, "(4) violations " + std::to_string(closed_fail));
  v.require(lattice_gap <= kExact, "c(A) vs E[I_A] " + num(lattice_gap));
  return v;
}

Verdict extension_consistency() {
  Verdict v;
  const auto f = parse_closed_set("[0.1,inf)");
  const auto envelopes = MonotoneScheme::closed_envelopes(f);
  const MonotoneScheme squared(
      Direction::Down,
      [f](std::size_t k) {
        const auto e = envelope_closed(f, 3 * k);
        return e * e;
      },
      true, "envdown3sq");
  const auto tree = tree_of(2, 3, Recombination::Path);
  const TreeEngine engine(tree);
  const auto a = extend_down(engine, envelopes, 0.0, kTreeStop);
  const auto b = extend_down(engine, squared, 0.0, kTreeStop);
  const auto event = TreeEvent::from_nodes(
      tree, 3, [&](std::size_t j) { return f.contains(tree.level(3)[j].x); });
  const double c = capacity(tree, event).value;
  v.require(a.converged && b.converged, "converged");
  v.require(std::abs(a.scalar() - b.scalar()) <= kStabilize,
            "schemes differ by " + num(std::abs(a.scalar() - b.scalar())));
  v.require(std::abs(a.scalar() - c) <= kCapacityCross,
            "vs capacity " + num(std::abs(a.scalar() - c)));
  return v;
}

Verdict contraction() {
  Verdict v;
  std::mt19937_64 rng(109);
  std::uniform_int_distribution<int> steps(1, 8);
  std::uniform_int_distribution<int> width(1, 3);
  double worst = -INFINITY;
  for (int rep = 0; rep < 200; ++rep) {
    const auto m = static_cast<std::size_t>(width(rng));
    const int n = steps(rng);
    const auto tree = tree_of(m, n, Recombination::State);
    const auto x = oracle::random_lipschitz(rng).payoff;
    const auto y = oracle::random_lipschitz(rng).payoff;
    const int t = std::uniform_int_distribution<int>(0, n)(rng);
    const auto ex = backward_induct(tree, x)[static_cast<std::size_t>(t)];
    const auto ey = backward_induct(tree, y)[static_cast<std::size_t>(t)];
    AdaptedField d{t, std::vector<double>(ex.size())};
    for (std::size_t i = 0; i < d.size(); ++i) d.values[i] = std::abs(ex[i] - ey[i]);
    const double lhs = induct(tree, d)[0][0];
    const double rhs = expect(tree, pabs(x - y));
    worst = std::max(worst, lhs - rhs);
  }
  v.require(worst <= kExact, "max excess " + num(worst));
  return v;
}

struct StopSetup {
  ScenarioTree tree;
  StoppingRule tau;
  StoppingRule sigma;
  Payoff xi;
};

StopSetup stop_setup() {
  auto tree = tree_of(2, 10, Recombination::Path);
  const double b = std::sqrt(kCoef.sigma_high_sq()) * std::sqrt(1.0 * tree.dt()) * 3.0;
  auto tau = exit_time(tree, ClosedSet({{-b, b}}), 1.0);
  auto sigma = tau.min(tree.level_of_time(0.5));
  return {std::move(tree), std::move(tau), std::move(sigma), Payoff::call(0.0)};
}

Verdict optional_stopping(const StopSetup& s) {
  Verdict v;
  const auto r = optional_stopping_check(s.tree, s.xi, s.sigma, s.tau);
  v.require(r.max_gap <= kExact, "max_gap " + num(r.max_gap));
  v.require(r.sigma_gap <= kExact, "sigma gap " + num(r.sigma_gap));

  const auto cfg = write_temp(
      "degenerate", R"({"coef":{"sigma_low_sq":0,"sigma_high_sq":1},"tree":{"N":10}})");
  const int code = cli_code({"stop", "--config", cfg});
  v.require(code == cli::kPrecondition, "degenerate exit " + std::to_string(code));
  return v;
}

Verdict dyadic_discretization(const StopSetup& s) {
  Verdict v;
  const auto big_k = static_cast<std::int64_t>(s.tau.horizon_level());
  int bad = 0;
  for (int n = 0; n <= 8; ++n) {
    const auto times = dyadic_times(s.tau, n);
    for (std::size_t j = 0; j < times.size(); ++j) {
      // tau^n - tau in [0, T 2^-n]  <=>  0 <= i K - k 2^n <= K.
      const auto d = static_cast<std::int64_t>(times[j]) * big_k -
                     static_cast<std::int64_t>(s.tau.level(j)) * (std::int64_t{1} << n);
      if (d < 0 || d > big_k) ++bad;
    }
  }
  const auto gaps = dyadic_convergence(s.tree, s.xi, s.tau, 8);
  bool monotone = true;
  for (std::size_t i = 1; i < gaps.size(); ++i)
    if (gaps[i] > gaps[i - 1]) monotone = false;
  v.require(bad == 0, "bound violations " + std::to_string(bad));
  v.require(monotone, std::string("nonincreasing ") + (monotone ? "yes" : "no"));
  v.require(gaps.back() <= kDyadicTol, "gap at n=8 " + num(gaps.back()));
  return v;
}

Verdict quadratic_variation_bounds() {
  Verdict v;
  double hi_gap = 0.0, lo_gap = 0.0;
  int outside = 0;
  for (std::size_t m : {1u, 2u, 3u}) {
    const auto& c = coef_for(m);
    for (int n = 1; n <= 8; ++n) {
      const auto tree = tree_of(m, n, Recombination::State);
      const auto q = Payoff::qv_identity();
      hi_gap = std::max(hi_gap, std::abs(expect(tree, q) - c.sigma_high_sq()));
      lo_gap = std::max(lo_gap, std::abs(-expect(tree, -q) - c.sigma_low_sq()));
      const auto qv = quadratic_variation(tree);
      for (int k = 0; k <= n; ++k) {
        const auto [lo, hi] = tree.qv_bounds(k);
        for (double x : qv[static_cast<std::size_t>(k)].values)
          if (!(lo <= x && x <= hi)) ++outside;
      }
    }
  }
  v.require(hi_gap <= kExact, "upper " + num(hi_gap));
  v.require(lo_gap <= kExact, "lower " + num(lo_gap));
  v.require(outside == 0, "nodes outside bounds " + std::to_string(outside));
  return v;
}

Verdict counterexample() {
  Verdict v;
  for (int n : {4, 16}) {
    const auto grid = VolatilityGrid::from_variances(kCoef, {0.25, 1.0 - 1.0 / (2.0 * n), 1.0});
    const auto [x, y] = counterexample_run(kCoef, grid, n, 8);
    v.require(x == -1.0 && y == 0.0, "n=" + std::to_string(n) + " (" + num(x) + ", " + num(y) + ")");
  }
  const auto [x, y] = counterexample_run(kClassical, grid_for(1), 4, 8);
  v.require(x == 0.0 && y == 0.0, "classical (" + num(x) + ", " + num(y) + ")");
  return v;
}

Verdict cross_engine() {
  Verdict v;
  const auto grid = Grid1D::cfl_tight(kCoef, 8.0, 0.02);
  double worst = 0.0;
  for (const auto& p : {Payoff::call(0.0), Payoff::put(0.0), Payoff::abs(),
                        Payoff::square_clamped(1.0)}) {
    const double t = expect(kCoef, grid_for(2), 256, 1.0, p);
    const double u = expect_gnormal(kCoef, p, 1.0, grid);
    worst = std::max(worst, std::abs(t - u));
  }
  v.require(worst <= kCrossEngine, "max |tree(256) - pde| " + num(worst));

  int code = 0;
  const auto table = cli_out({"convergence"}, code);
  const auto rows = std::count(table.begin(), table.end(), '\n') - 1;
  v.require(code == 0 && table.rfind("method,resolution,value,gap,runtime_ms\n", 0) == 0,
            "convergence table (call:0) " + std::to_string(rows) + " rows, exit " +
                std::to_string(code));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  std::optional<StopSetup> stop;
  auto stop_ref = [&]() -> const StopSetup& {
    if (!stop) stop.emplace(stop_setup());
    return *stop;
  };
  const std::vector<Criterion> criteria{
      {1, "classical reduction", classical_reduction},
      {2, "convex/concave collapse", convex_concave_collapse},
      {3, "axiom suite", axiom_suite},
      {4, "tower property", tower_property},
      {5, "representation oracle", representation_oracle},
      {6, "pasting", pasting},
      {7, "capacity laws", capacity_laws},
      {8, "extension consistency", extension_consistency},
      {9, "contraction", contraction},
      {10, "optional stopping", [&] { return optional_stopping(stop_ref()); }},
      {11, "dyadic discretization", [&] { return dyadic_discretization(stop_ref()); }},
      {12, "quadratic variation", quadratic_variation_bounds},
      {13, "counterexample", counterexample},
      {14, "cross-engine convergence", cross_engine},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("threw: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::printf("%s %2d %-26s %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
