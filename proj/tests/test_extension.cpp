#include <cmath>
#include <random>

#include "doctest.h"
#include "gexp/extension.hpp"
#include "gexp/measures.hpp"
#include "oracles.hpp"

using namespace gexp;

namespace {

const GCoefficients kCoef(0.25, 1.0);
const VolatilityGrid kGrid = VolatilityGrid::uniform(kCoef, 2);

ScenarioTree tree_of(int n, Recombination r = Recombination::Path) {
  return build_tree(kCoef, kGrid, n, 1.0, {r});
}

// envelope_closed(F, 3k)^2: a second Down scheme for the same indicator.
MonotoneScheme squared_envelopes(const ClosedSet& f) {
  return MonotoneScheme(
      Direction::Down,
      [f](std::size_t k) {
        const auto e = envelope_closed(f, 3 * k);
        return e * e;
      },
      true, "envdown3sq");
}

}  // namespace

TEST_CASE("envelope examples") {
  const auto f = parse_closed_set("[0,inf)");
  CHECK(envelope_closed(f, 2).at(-0.25) == 0.5);
  CHECK(envelope_closed(f, 2).at(-1.0) == 0.0);
  for (std::size_t k : {1u, 7u, 1000u}) CHECK(envelope_closed(f, k).at(0.3) == 1.0);
  CHECK(envelope_closed(f, 5).lipschitz_bound().value() == 5.0);

  const auto g = parse_open_set("(0,inf)");
  CHECK(envelope_open(g, 4).at(0.1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(envelope_open(g, 4).at(-0.1) == 0.0);
  CHECK(envelope_open(g, 4).at(0.0) == 0.0);
  CHECK(envelope_open(g, 1000).at(3.0) == 1.0);

  CHECK_THROWS_AS(envelope_closed(ClosedSet({}), 1), PreconditionError);
  CHECK_THROWS_AS(envelope_open(OpenSet({}), 1), PreconditionError);
  CHECK_THROWS_AS(envelope_closed(f, 0), PreconditionError);

  const auto q = envelope_closed(f, 2, Coordinate::QuadVar);
  CHECK(q.needs_qv());
  CHECK(q(PathState{5.0, -0.25, {}, 0.0}) == 0.5);
}

TEST_CASE("extend_down examples") {
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const auto c = extend_down(eng, MonotoneScheme::constant(Payoff::constant(0.7)), 0.0, kTreeStop);
  CHECK(c.converged);
  CHECK(c.iterations == 2);
  CHECK(c.scalar() == 0.7);

  const double a = 0.2;
  const auto f = ClosedSet({{a, INFINITY}});
  const auto r = extend_down(eng, MonotoneScheme::closed_envelopes(f), 0.0, kTreeStop);
  const auto event = TreeEvent::from_predicate(tree, [&](const PathState& s) { return s.x >= a; });
  CHECK(r.converged);
  CHECK(std::abs(r.scalar() - capacity(tree, event).value) <= 1e-12);
  for (std::size_t i = 1; i < r.values.size(); ++i) CHECK(r.values[i][0] <= r.values[i - 1][0]);

  const GCoefficients one(1.0, 1.0);
  const PdeEngine pde(one, Grid1D::cfl_tight(one, 8.0, 0.01), 1.0);
  const auto half = extend_down(pde, MonotoneScheme::closed_envelopes(parse_closed_set("[0,inf)")),
                                0.0, kPdeStop);
  CHECK(half.converged);
  CHECK(std::abs(half.scalar() - 0.5) <= 5e-3);
  CHECK_THROWS_AS(pde.conditional(Payoff::square(), 0.5), PreconditionError);
}

TEST_CASE("extend_down contract violations") {
  const auto tree = tree_of(2);
  const TreeEngine eng(tree);
  const MonotoneScheme rising(
      Direction::Down, [](std::size_t k) { return Payoff::constant(static_cast<double>(k)); }, true,
      "rising");
  CHECK_THROWS_AS(extend_down(eng, rising, 0.0, kTreeStop), VerificationError);
  CHECK_THROWS_AS(extend_down(eng, MonotoneScheme::open_envelopes(parse_open_set("(0,1)")), 0.0,
                              kTreeStop),
                  PreconditionError);
  // 1/k decreases too slowly for the tolerance: flagged, not fatal.
  const MonotoneScheme slow(
      Direction::Down, [](std::size_t k) { return Payoff::constant(1.0 / static_cast<double>(k)); },
      true, "slow");
  const auto r = extend_down(eng, slow, 0.0, kTreeStop);
  CHECK_FALSE(r.converged);
  CHECK(r.indices.back() == kTreeStop.max_k);
}

TEST_CASE("extend_up examples") {
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const auto f = parse_closed_set("[0.1,inf)");
  const auto inner = MonotoneScheme::closed_envelopes(f);
  const auto up = extend_up(eng, DoubleScheme::outer_constant(inner), 0.0, kTreeStop);
  CHECK(up.scalar() == extend_down(eng, inner, 0.0, kTreeStop).scalar());

  // X_n = -I{1 - 1/n < q < 1}: each E-hat is 0 since sigma_1 paths avoid the band.
  const auto state = tree_of(4, Recombination::State);
  const TreeEngine seng(state);
  const DoubleScheme bands(
      [](std::size_t n) {
        const OpenSet band({{1.0 - 1.0 / static_cast<double>(n), 1.0}});
        return MonotoneScheme::open_envelopes(band, Coordinate::QuadVar).negated();
      },
      true, "-qv band");
  const auto b = extend_up(seng, bands, 0.0, kTreeStop);
  CHECK(b.converged);
  CHECK(b.scalar() == 0.0);
  for (const auto& v : b.values) CHECK(v[0] == 0.0);

  const auto open = parse_open_set("(0,inf)");
  const auto lifted = extend_up(eng, DoubleScheme::lift(MonotoneScheme::open_envelopes(open)), 0.0,
                                kTreeStop);
  const auto event = TreeEvent::from_predicate(tree, [](const PathState& s) { return s.x > 0.0; });
  CHECK(lifted.converged);
  CHECK(std::abs(lifted.scalar() - capacity(tree, event).value) <= 1e-12);
}

TEST_CASE("extend_l1") {
  const double same[] = {0.3, 0.3, 0.3};
  const double zero[] = {0.0, 0.0, 0.0};
  CHECK(extend_l1(same, zero).value == 0.3);
  const double xs[] = {1.0, 0.5, 0.25, 0.125};
  const double ok[] = {1.0, 0.5, 0.25, 0.125};
  const auto r = extend_l1(xs, ok);
  CHECK(r.value == 0.125);
  CHECK(r.bound == 0.125);
  const double tight[] = {0.5, 0.5, 0.1, 0.0};
  CHECK_THROWS_AS(extend_l1(xs, tight), VerificationError);

  // Two interleaved sequences converging to 0 from both sides.
  const double a[] = {0.5, -0.25, 0.125, -0.0625, 1e-12};
  const double b[] = {-0.5, 0.25, -0.125, 0.0625, -1e-12};
  const double cert[] = {0.75, 0.375, 0.1875, 0.0625, 1e-12};
  CHECK(std::abs(extend_l1(a, cert).value - extend_l1(b, cert).value) <= 1e-9);
}

TEST_CASE("field extend_l1 uses the E-hat norm") {
  const auto tree = tree_of(2);
  AdaptedField f1{2, std::vector<double>(tree.level_size(2), 1.0)};
  AdaptedField f2 = f1;
  f2.values[0] = 2.0;  // differs on one path, reachable with probability 1/4
  const AdaptedField fs[] = {f1, f2};
  const double good[] = {0.25, 0.0};
  CHECK(extend_l1(tree, fs, good).value.values == f2.values);
  const double bad[] = {0.2, 0.0};
  CHECK_THROWS_AS(extend_l1(tree, fs, bad), VerificationError);
}

TEST_CASE("dominated extension") {
  std::mt19937_64 rng(51);
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const MirrorEngine mirror(eng);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = oracle::random_lipschitz(rng).payoff;
    const auto y = oracle::random_lipschitz(rng).payoff;
    const auto r = dominated_extend(DominatedKind::Mirror, eng, MonotoneScheme::constant(x), 0.0,
                                    kTreeStop);
    CHECK(r.scalar() == -expect(tree, -x));
    CHECK(r.scalar() <= expect(tree, x) + 1e-12);
    for (double t : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
      const auto ex = mirror.conditional(x, t), ey = mirror.conditional(y, t);
      const auto dxy = eng.conditional(x - y, t);
      for (std::size_t v = 0; v < ex.size(); ++v) CHECK(ex[v] - ey[v] <= dxy[v] + 1e-12);
    }
  }
  CHECK_THROWS_AS(dominated_extend(DominatedKind::Mirror, eng,
                                   MonotoneScheme::open_envelopes(parse_open_set("(0,1)")), 0.0,
                                   kTreeStop),
                  PreconditionError);
  auto ds = DoubleScheme::lift(MonotoneScheme::open_envelopes(parse_open_set("(0,inf)")));
  CHECK_THROWS_AS(dominated_extend(DominatedKind::Mirror, eng, ds, 0.0, kTreeStop),
                  PreconditionError);
  // I_(0,inf) is bounded lsc, so -I is the Down limit of the negated open envelopes.
  ds.with_negated_target(MonotoneScheme::open_envelopes(parse_open_set("(0,inf)")).negated());
  const auto r = dominated_extend(DominatedKind::Mirror, eng, ds, 0.0, kTreeStop);
  const auto event = TreeEvent::from_predicate(tree, [](const PathState& s) { return s.x <= 0.0; });
  CHECK(std::abs(r.scalar() - (1.0 - capacity(tree, event).value)) <= 1e-12);
}

TEST_CASE("counterexample") {
  const GCoefficients c(0.25, 1.0);
  for (int n : {4, 16}) {
    const auto g = VolatilityGrid::from_variances(c, {0.25, 1.0 - 1.0 / (2.0 * n), 1.0});
    const auto [a, b] = counterexample_run(c, g, n, 8);
    CHECK(a == -1.0);
    CHECK(b == 0.0);
  }
  const GCoefficients one(1.0, 1.0);
  const auto [a, b] = counterexample_run(one, VolatilityGrid::uniform(one, 1), 4, 8);
  CHECK(a == 0.0);
  CHECK(b == 0.0);
  CHECK_THROWS_AS(counterexample_run(c, VolatilityGrid::uniform(c, 2), 4, 8), PreconditionError);
}

TEST_CASE("sequence independence") {
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const GCoefficients one(1.0, 1.0);
  const PdeEngine pde(kCoef, Grid1D::cfl_tight(kCoef, 8.0, 0.01), 1.0);
  for (const char* text : {"[0,inf)", "[-0.3,0.3]", "[-2,-1]u[0.5,inf)"}) {
    const auto f = parse_closed_set(text);
    const auto a = extend_down(eng, MonotoneScheme::closed_envelopes(f), 0.0, kTreeStop);
    const auto b = extend_down(eng, squared_envelopes(f), 0.0, kTreeStop);
    CHECK(std::abs(a.scalar() - b.scalar()) <= 1e-9);
    const auto pa = extend_down(pde, MonotoneScheme::closed_envelopes(f), 0.0, kPdeStop);
    const auto pb = extend_down(pde, squared_envelopes(f), 0.0, kPdeStop);
    CHECK(std::abs(pa.scalar() - pb.scalar()) <= 1e-2);
  }
}

TEST_CASE("monotone stability: nested equals diagonal") {
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  auto f_n = [](std::size_t n) { return ClosedSet({{-1.0 / static_cast<double>(n), INFINITY}}); };
  const DoubleScheme nested(
      [f_n](std::size_t n) { return MonotoneScheme::closed_envelopes(f_n(n)); }, true, "nested",
      Direction::Down);
  const MonotoneScheme diagonal(
      Direction::Down, [f_n](std::size_t k) { return envelope_closed(f_n(k), k); }, true, "diag");
  const auto a = extend_down_nested(eng, nested, 0.0, kTreeStop);
  const auto b = extend_down(eng, diagonal, 0.0, kTreeStop);
  CHECK(a.converged);
  CHECK(std::abs(a.scalar() - b.scalar()) <= 1e-9);
  CHECK_THROWS_AS(extend_up(eng, nested, 0.0, kTreeStop), PreconditionError);
}

TEST_CASE("successive-difference stopping can halt on a plateau") {
  // F_n = [0.1 - 1/n, inf): n = 4 and n = 8 pick out the same terminal nodes
  // (all x >= 0), so the outer run stops there although the limit event is
  // x >= 0.1. Documents the stopping rule; not a contract violation.
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const DoubleScheme nested(
      [](std::size_t n) {
        return MonotoneScheme::closed_envelopes(ClosedSet({{0.1 - 1.0 / static_cast<double>(n), INFINITY}}));
      },
      true, "plateau", Direction::Down);
  const auto r = extend_down_nested(eng, nested, 0.0, kTreeStop);
  const auto at0 = TreeEvent::from_predicate(tree, [](const PathState& s) { return s.x >= 0.0; });
  CHECK(r.converged);
  CHECK(r.indices.back() == 8);
  CHECK(r.scalar() == capacity(tree, at0).value);
}

TEST_CASE("positivity split and contraction") {
  std::mt19937_64 rng(52);
  const auto tree = tree_of(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = oracle::random_lipschitz(rng).payoff;
    const auto y = oracle::random_lipschitz(rng).payoff;
    const auto fx = backward_induct(tree, x), fy = backward_induct(tree, y);
    const auto fpos = backward_induct(tree, positive_part(x));
    const double rhs = expect(tree, pabs(x - y));
    for (int t = 0; t <= 4; ++t) {
      const auto k = static_cast<std::size_t>(t);
      AdaptedField diff{t, std::vector<double>(fx[k].size())};
      for (std::size_t v = 0; v < diff.size(); ++v) {
        CHECK(fpos[k][v] >= std::max(fx[k][v], 0.0) - 1e-12);
        diff.values[v] = std::abs(fx[k][v] - fy[k][v]);
      }
      CHECK(induct(tree, diff).front()[0] <= rhs + 1e-12);
    }
  }
}

TEST_CASE("collapse of an F_t-measurable limit") {
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const auto f = parse_closed_set("[0,inf)");
  const int t = 2;
  const MonotoneScheme scheme(
      Direction::Down,
      [f, t](std::size_t k) {
        const auto e = envelope_closed(f, k);
        return Payoff::path([e, t](const PathState& s) { return e.at(s.positions[t]); }, static_cast<double>(k),
                            "env(B_t)");
      },
      true, "env(B_t)");
  const auto r = extend_down(eng, scheme, tree.time(t), kTreeStop);
  CHECK(r.converged);
  for (std::size_t v = 0; v < r.limit.size(); ++v)
    CHECK(r.limit[v] == (tree.level(t)[v].x >= 0.0 ? 1.0 : 0.0));
}

TEST_CASE("liminf closure smoke test") {
  // X_n = I[a + (-1)^n / n, inf) has liminf I(a, inf); sup_n inf_{k>=n} X_k is
  // the Up limit of I[a + 1/n', inf) with n' the first even index >= n.
  const auto tree = tree_of(3);
  const TreeEngine eng(tree);
  const double a = 0.0;
  const DoubleScheme liminf(
      [a](std::size_t n) {
        const std::size_t even = n % 2 ? n + 1 : n;
        return MonotoneScheme::closed_envelopes(ClosedSet({{a + 1.0 / static_cast<double>(even), INFINITY}}));
      },
      true, "liminf");
  const auto via = extend_up(eng, liminf, 0.0, kTreeStop);
  const auto direct = extend_up(
      eng, DoubleScheme::lift(MonotoneScheme::open_envelopes(OpenSet({{a, INFINITY}}))), 0.0,
      kTreeStop);
  CHECK(std::abs(via.scalar() - direct.scalar()) <= 1e-9);

  // A min of envelopes is the envelope of the intersection's indicator limit.
  const auto f1 = parse_closed_set("[-1,0.5]"), f2 = parse_closed_set("[0,2]");
  const MonotoneScheme both(
      Direction::Down,
      [f1, f2](std::size_t k) { return pmin(envelope_closed(f1, k), envelope_closed(f2, k)); }, true,
      "min");
  const auto inter = extend_down(eng, MonotoneScheme::closed_envelopes(parse_closed_set("[0,0.5]")),
                                 0.0, kTreeStop);
  CHECK(std::abs(extend_down(eng, both, 0.0, kTreeStop).scalar() - inter.scalar()) <= 1e-9);
}

TEST_CASE("mirror order") {
  std::mt19937_64 rng(53);
  const auto tree = tree_of(4, Recombination::State);
  const TreeEngine eng(tree);
  const MirrorEngine mirror(eng);
  for (int rep = 0; rep < 20; ++rep) {
    const auto x = oracle::random_lipschitz(rng).payoff + 0.2 * Payoff::qv_identity();
    CHECK(mirror.conditional(x, 0.0)[0] <= eng.conditional(x, 0.0)[0] + 1e-12);
  }
}
