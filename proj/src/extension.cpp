#include "gexp/extension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gexp {
namespace {

constexpr std::size_t kSampleCount = 1000;
constexpr double kSlack = 1e-12;

double slack_for(double a, double b) {
  return kSlack * std::max({1.0, std::abs(a), std::abs(b)});
}

double max_diff(const AdaptedField& a, const AdaptedField& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

// True when `next` moved against `dir` relative to `prev` anywhere (beyond slack).
bool breaks_order(std::span<const double> prev, std::span<const double> next, Direction dir,
                  double extra, std::size_t* where) {
  for (std::size_t j = 0; j < prev.size(); ++j) {
    const double allow = slack_for(prev[j], next[j]) + extra;
    const bool bad = dir == Direction::Down ? next[j] > prev[j] + allow
                                            : next[j] < prev[j] - allow;
    if (bad) {
      *where = j;
      return true;
    }
  }
  return false;
}

std::string dir_name(Direction d) { return d == Direction::Down ? "nonincreasing" : "nondecreasing"; }

void check_stop(const StopRule& stop) {
  if (!(stop.tolerance > 0.0) || stop.max_k < 1)
    throw PreconditionError("stop rule needs tolerance > 0 and max_k >= 1");
}

ExtensionResult run_double(const Engine& engine, const DoubleScheme& scheme, double t,
                           StopRule stop) {
  check_stop(stop);
  const Direction dir = scheme.outer_direction();
  ExtensionResult out;
  std::vector<double> prev_sample;
  double prev_err = 0.0;
  for (std::size_t n = 1; n <= stop.max_k; n *= 2) {
    const MonotoneScheme inner = scheme.at(n);
    if (inner.direction() != Direction::Down)
      throw PreconditionError("inner schemes must be Down, got '" + inner.description() + "'");
    if (scheme.claimed_monotone()) {
      auto s = engine.sample(inner.at(stop.max_k));
      std::size_t where = 0;
      if (!prev_sample.empty() && breaks_order(prev_sample, s, dir, 0.0, &where))
        throw VerificationError("outer scheme '" + scheme.description() + "' is not " +
                                dir_name(dir) + " at n = " + std::to_string(n) +
                                ", sample " + std::to_string(where));
      prev_sample = std::move(s);
    }
    auto res = extend_down(engine, inner, t, stop);
    out.evaluations += res.evaluations;
    const double err = std::max(stop.tolerance, res.cauchy_certificate.back());
    if (!out.values.empty()) {
      const auto& last = out.values.back();
      std::size_t where = 0;
      if (scheme.claimed_monotone() &&
          breaks_order(last.values, res.limit.values, dir, err + prev_err, &where))
        throw VerificationError("outer extension values are not " + dir_name(dir) +
                                " at n = " + std::to_string(n) + ", node " +
                                std::to_string(where));
      const double d = max_diff(last, res.limit);
      out.cauchy_certificate.push_back(d);
      out.values.push_back(res.limit);
      out.indices.push_back(n);
      if (d <= stop.tolerance) {
        out.converged = true;
        break;
      }
    } else {
      out.cauchy_certificate.push_back(std::numeric_limits<double>::infinity());
      out.values.push_back(res.limit);
      out.indices.push_back(n);
    }
    prev_err = err;
  }
  out.iterations = out.values.size();
  out.limit = out.values.back();
  return out;
}

}  // namespace

Payoff envelope_closed(const ClosedSet& set, std::size_t k, Coordinate coord) {
  if (set.empty()) throw PreconditionError("envelope of an empty closed set");
  if (k < 1) throw PreconditionError("envelope index must be >= 1");
  const double kk = static_cast<double>(k);
  auto f = [set, kk](double v) { return std::max(0.0, 1.0 - kk * set.distance(v)); };
  const std::string desc = "envdown[" + set.to_string() + ",k=" + std::to_string(k) + "]";
  return coord == Coordinate::Position ? Payoff::terminal(f, kk, desc)
                                       : Payoff::quad_var(f, kk, "qv:" + desc);
}

Payoff envelope_open(const OpenSet& set, std::size_t k, Coordinate coord) {
  if (set.empty()) throw PreconditionError("envelope of an empty open set");
  if (k < 1) throw PreconditionError("envelope index must be >= 1");
  const double kk = static_cast<double>(k);
  auto f = [set, kk](double v) { return std::min(1.0, kk * set.distance_to_complement(v)); };
  const std::string desc = "envup[" + set.to_string() + ",k=" + std::to_string(k) + "]";
  return coord == Coordinate::Position ? Payoff::terminal(f, kk, desc)
                                       : Payoff::quad_var(f, kk, "qv:" + desc);
}

MonotoneScheme::MonotoneScheme(Direction direction, Generator generator, bool claimed_monotone,
                               std::string description)
    : direction_(direction),
      generator_(std::move(generator)),
      claimed_(claimed_monotone),
      description_(std::move(description)) {
  if (!generator_) throw PreconditionError("scheme needs a generator");
}

MonotoneScheme MonotoneScheme::constant(const Payoff& p, Direction direction) {
  return MonotoneScheme(direction, [p](std::size_t) { return p; }, true, p.description());
}

MonotoneScheme MonotoneScheme::closed_envelopes(const ClosedSet& set, Coordinate coord) {
  return MonotoneScheme(
      Direction::Down, [set, coord](std::size_t k) { return envelope_closed(set, k, coord); },
      true,
      std::string(coord == Coordinate::QuadVar ? "qv:" : "") + "envdown:closed:" +
          set.to_string());
}

MonotoneScheme MonotoneScheme::open_envelopes(const OpenSet& set, Coordinate coord) {
  return MonotoneScheme(
      Direction::Up, [set, coord](std::size_t k) { return envelope_open(set, k, coord); }, true,
      std::string(coord == Coordinate::QuadVar ? "qv:" : "") + "envup:open:" + set.to_string());
}

MonotoneScheme MonotoneScheme::negated() const {
  auto g = generator_;
  return MonotoneScheme(direction_ == Direction::Down ? Direction::Up : Direction::Down,
                        [g](std::size_t k) { return -g(k); }, claimed_,
                        "neg:" + description_);
}

DoubleScheme::DoubleScheme(Outer outer, bool claimed_monotone, std::string description,
                           Direction outer_direction)
    : outer_(std::move(outer)),
      claimed_(claimed_monotone),
      description_(std::move(description)),
      outer_direction_(outer_direction) {
  if (!outer_) throw PreconditionError("double scheme needs an outer generator");
}

DoubleScheme DoubleScheme::outer_constant(const MonotoneScheme& inner) {
  return DoubleScheme([inner](std::size_t) { return inner; }, true, inner.description());
}

DoubleScheme DoubleScheme::lift(const MonotoneScheme& up) {
  if (up.direction() != Direction::Up) throw PreconditionError("lift needs an Up scheme");
  return DoubleScheme(
      [up](std::size_t n) { return MonotoneScheme::constant(up.at(n), Direction::Down); },
      up.claimed_monotone(), up.description());
}

DoubleScheme& DoubleScheme::with_negated_target(MonotoneScheme witness) {
  if (witness.direction() != Direction::Down)
    throw PreconditionError("negated-target witness must be a Down scheme");
  negated_target_ = std::move(witness);
  return *this;
}

AdaptedField TreeEngine::conditional(const Payoff& p, double t) const {
  const auto fields = backward_induct(tree_, p);
  return condition_at(fields, tree_, t);
}

std::vector<double> TreeEngine::sample(const Payoff& p) const {
  const int n = tree_.steps();
  const std::size_t size = tree_.level_size(n);
  const std::size_t stride = std::max<std::size_t>(1, (size + kSampleCount - 1) / kSampleCount);
  std::vector<double> out;
  std::vector<double> buf;
  for (std::size_t j = 0; j < size; j += stride) out.push_back(p(terminal_state(tree_, j, buf)));
  return out;
}

AdaptedField PdeEngine::conditional(const Payoff& p, double t) const {
  if (t != 0.0) throw PreconditionError("the PDE engine only evaluates t = 0");
  return AdaptedField{0, {expect_gnormal(coef_, p, horizon_, grid_)}};
}

std::vector<double> PdeEngine::sample(const Payoff& p) const {
  const std::size_t size = grid_.points();
  const std::size_t stride = std::max<std::size_t>(1, (size + kSampleCount - 1) / kSampleCount);
  std::vector<double> out;
  for (std::size_t j = 0; j < size; j += stride) out.push_back(p.at(grid_.x(j)));
  return out;
}

AdaptedField MirrorEngine::conditional(const Payoff& p, double t) const {
  auto f = base_.conditional(-p, t);
  for (auto& v : f.values) v = -v;
  return f;
}

double ExtensionResult::scalar() const {
  if (limit.size() != 1) throw PreconditionError("scalar() needs a single-node field");
  return limit[0];
}

ExtensionResult extend_down(const Engine& engine, const MonotoneScheme& scheme, double t,
                            StopRule stop) {
  check_stop(stop);
  if (scheme.direction() != Direction::Down)
    throw PreconditionError("extend_down needs a Down scheme, got '" + scheme.description() +
                            "'");
  ExtensionResult out;
  std::vector<double> prev_sample;
  for (std::size_t k = 1; k <= stop.max_k; k *= 2) {
    const Payoff p = scheme.at(k);
    if (scheme.claimed_monotone()) {
      auto s = engine.sample(p);
      std::size_t where = 0;
      if (!prev_sample.empty() && breaks_order(prev_sample, s, Direction::Down, 0.0, &where))
        throw VerificationError("scheme '" + scheme.description() +
                                "' is not nonincreasing at k = " + std::to_string(k) +
                                ", sample " + std::to_string(where));
      prev_sample = std::move(s);
    }
    auto field = engine.conditional(p, t);
    ++out.evaluations;
    if (out.values.empty()) {
      out.cauchy_certificate.push_back(std::numeric_limits<double>::infinity());
      out.values.push_back(std::move(field));
      out.indices.push_back(k);
      continue;
    }
    const auto& last = out.values.back();
    std::size_t where = 0;
    if (scheme.claimed_monotone() &&
        breaks_order(last.values, field.values, Direction::Down, 0.0, &where))
      throw VerificationError("extension values are not nonincreasing at k = " +
                              std::to_string(k) + ", node " + std::to_string(where));
    const double d = max_diff(last, field);
    out.cauchy_certificate.push_back(d);
    out.values.push_back(std::move(field));
    out.indices.push_back(k);
    if (d <= stop.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.iterations = out.values.size();
  out.limit = out.values.back();
  return out;
}

ExtensionResult extend_up(const Engine& engine, const DoubleScheme& scheme, double t,
                          StopRule stop) {
  if (scheme.outer_direction() != Direction::Up)
    throw PreconditionError("extend_up needs an Up outer scheme");
  return run_double(engine, scheme, t, stop);
}

ExtensionResult extend_down_nested(const Engine& engine, const DoubleScheme& scheme, double t,
                                   StopRule stop) {
  if (scheme.outer_direction() != Direction::Down)
    throw PreconditionError("extend_down_nested needs a Down outer scheme");
  return run_double(engine, scheme, t, stop);
}

L1Limit extend_l1(std::span<const double> values, std::span<const double> certificate) {
  if (values.empty() || values.size() != certificate.size())
    throw PreconditionError("extend_l1 needs matching non-empty values and certificate");
  for (double c : certificate)
    if (!(c >= 0.0)) throw PreconditionError("certificate entries must be >= 0");
  for (std::size_t n = 0; n < values.size(); ++n)
    for (std::size_t m = n + 1; m < values.size(); ++m) {
      const double d = std::abs(values[m] - values[n]);
      if (d > certificate[n] + slack_for(values[m], values[n]))
        throw VerificationError("Cauchy certificate broken: |x_" + std::to_string(m) + " - x_" +
                                std::to_string(n) + "| = " + std::to_string(d) + " > " +
                                std::to_string(certificate[n]));
    }
  return {values.back(), certificate.back()};
}

FieldL1Limit extend_l1(const ScenarioTree& tree, std::span<const AdaptedField> values,
                       std::span<const double> certificate) {
  if (values.empty() || values.size() != certificate.size())
    throw PreconditionError("extend_l1 needs matching non-empty values and certificate");
  for (double c : certificate)
    if (!(c >= 0.0)) throw PreconditionError("certificate entries must be >= 0");
  const int level = values.front().level;
  for (const auto& f : values)
    if (f.level != level || f.size() != tree.level_size(level))
      throw PreconditionError("extend_l1 fields must share a tree level");
  for (std::size_t n = 0; n < values.size(); ++n)
    for (std::size_t m = n + 1; m < values.size(); ++m) {
      AdaptedField diff{level, std::vector<double>(values[n].size())};
      double scale = 1.0;
      for (std::size_t j = 0; j < diff.size(); ++j) {
        diff.values[j] = std::abs(values[m][j] - values[n][j]);
        scale = std::max({scale, std::abs(values[m][j]), std::abs(values[n][j])});
      }
      const double d = induct(tree, diff).front()[0];
      if (d > certificate[n] + kSlack * scale)
        throw VerificationError("Cauchy certificate broken: E|F_" + std::to_string(m) +
                                " - F_" + std::to_string(n) + "| = " + std::to_string(d) +
                                " > " + std::to_string(certificate[n]));
    }
  return {values.back(), certificate.back()};
}

ExtensionResult dominated_extend(DominatedKind, const Engine& engine,
                                 const MonotoneScheme& scheme, double t, StopRule stop) {
  if (scheme.direction() != Direction::Down)
    throw PreconditionError(
        "dominated extension takes Down schemes; present an Up target as a double scheme "
        "with a negated Down witness");
  const MirrorEngine mirror(engine);
  return extend_down(mirror, scheme, t, stop);
}

ExtensionResult dominated_extend(DominatedKind, const Engine& engine, const DoubleScheme& scheme,
                                 double t, StopRule stop) {
  if (!scheme.negated_target())
    throw PreconditionError("target of '" + scheme.description() +
                            "' has no negated Down witness");
  const MirrorEngine mirror(engine);
  return extend_up(mirror, scheme, t, stop);
}

std::pair<double, double> counterexample_run(const GCoefficients& coef,
                                             const VolatilityGrid& grid, int n, int steps,
                                             StopRule stop) {
  if (n < 1) throw PreconditionError("counterexample needs n >= 1");
  const double hi = coef.sigma_high_sq();
  const double lo = hi - 1.0 / static_cast<double>(n);
  if (!coef.is_classical()) {
    const auto vars = grid.variances();
    if (std::none_of(vars.begin(), vars.end(), [&](double v) { return lo < v && v < hi; }))
      throw PreconditionError("grid has no variance inside (" + std::to_string(lo) + ", " +
                              std::to_string(hi) + ")");
  }
  const auto tree = build_tree(coef, grid, steps, 1.0, {Recombination::State});
  const TreeEngine engine(tree);
  const OpenSet band({{lo, hi}});
  const auto x_n = MonotoneScheme::open_envelopes(band, Coordinate::QuadVar).negated();
  const auto zero = MonotoneScheme::constant(Payoff::constant(0.0));
  const double a = dominated_extend(DominatedKind::Mirror, engine, x_n, 0.0, stop).scalar();
  const double b = dominated_extend(DominatedKind::Mirror, engine, zero, 0.0, stop).scalar();
  return {a, b};
}

}  // namespace gexp
