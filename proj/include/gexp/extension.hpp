#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gexp/lattice.hpp"
#include "gexp/pde.hpp"
#include "gexp/sets.hpp"

namespace gexp {

// Monotone extensions of Ê_t beyond Lipschitz payoffs. The extension spaces
// are never built as sets: a random variable is represented by a scheme, an
// indexed family of Lipschitz payoffs converging monotonically to it, and the
// extension is the limit of the engine's values along the scheme.

enum class Direction { Down, Up };

/// Which terminal coordinate an envelope reads.
enum class Coordinate { Position, QuadVar };

/// phi_k = max(0, 1 - k dist(., F)); decreases to the indicator of F.
Payoff envelope_closed(const ClosedSet& set, std::size_t k,
                       Coordinate coord = Coordinate::Position);

/// psi_k = min(1, k dist(., complement of G)); increases to the indicator of G.
Payoff envelope_open(const OpenSet& set, std::size_t k, Coordinate coord = Coordinate::Position);

/// Index k -> Lipschitz payoff, monotone in k in the given direction.
class MonotoneScheme {
 public:
  using Generator = std::function<Payoff(std::size_t)>;

  MonotoneScheme(Direction direction, Generator generator, bool claimed_monotone,
                 std::string description);

  /// generator(k) = p for every k.
  static MonotoneScheme constant(const Payoff& p, Direction direction = Direction::Down);
  /// k -> envelope_closed(set, k): Down to the indicator of a closed set.
  static MonotoneScheme closed_envelopes(const ClosedSet& set,
                                         Coordinate coord = Coordinate::Position);
  /// k -> envelope_open(set, k): Up to the indicator of an open set.
  static MonotoneScheme open_envelopes(const OpenSet& set,
                                       Coordinate coord = Coordinate::Position);
  /// k -> -generator(k), with the direction flipped.
  MonotoneScheme negated() const;

  Direction direction() const { return direction_; }
  Payoff at(std::size_t k) const { return generator_(k); }
  bool claimed_monotone() const { return claimed_; }
  const std::string& description() const { return description_; }

 private:
  Direction direction_;
  Generator generator_;
  bool claimed_;
  std::string description_;
};

/// Outer index n -> Down scheme; the outer limits move in `outer_direction`
/// (Up for the upward extension).
class DoubleScheme {
 public:
  using Outer = std::function<MonotoneScheme(std::size_t)>;

  DoubleScheme(Outer outer, bool claimed_monotone, std::string description,
               Direction outer_direction = Direction::Up);

  /// Every outer index gives `inner`.
  static DoubleScheme outer_constant(const MonotoneScheme& inner);
  /// An Up scheme of Lipschitz payoffs, each taken as a constant Down scheme.
  static DoubleScheme lift(const MonotoneScheme& up);

  MonotoneScheme at(std::size_t n) const { return outer_(n); }
  Direction outer_direction() const { return outer_direction_; }
  bool claimed_monotone() const { return claimed_; }
  const std::string& description() const { return description_; }

  /// Down scheme for -X, certifying X in -L^{1*}. Needed by dominated_extend.
  const std::optional<MonotoneScheme>& negated_target() const { return negated_target_; }
  DoubleScheme& with_negated_target(MonotoneScheme witness);

 private:
  Outer outer_;
  bool claimed_;
  std::string description_;
  Direction outer_direction_;
  std::optional<MonotoneScheme> negated_target_;
};

/// Something that evaluates conditional expectations of payoffs.
class Engine {
 public:
  virtual ~Engine() = default;
  /// The field of E_t[p] at lattice time t.
  virtual AdaptedField conditional(const Payoff& p, double t) const = 0;
  /// p evaluated on up to 10^3 fixed sample states.
  virtual std::vector<double> sample(const Payoff& p) const = 0;
  virtual std::string name() const = 0;
};

/// Backward induction on a scenario tree.
class TreeEngine final : public Engine {
 public:
  explicit TreeEngine(const ScenarioTree& tree) : tree_(tree) {}
  AdaptedField conditional(const Payoff& p, double t) const override;
  std::vector<double> sample(const Payoff& p) const override;
  std::string name() const override { return "tree"; }
  const ScenarioTree& tree() const { return tree_; }

 private:
  const ScenarioTree& tree_;
};

/// G-heat solves; unconditional (t = 0) only, for B at `horizon`.
class PdeEngine final : public Engine {
 public:
  PdeEngine(GCoefficients coef, Grid1D grid, double horizon)
      : coef_(coef), grid_(grid), horizon_(horizon) {}
  AdaptedField conditional(const Payoff& p, double t) const override;
  std::vector<double> sample(const Payoff& p) const override;
  std::string name() const override { return "pde"; }

 private:
  GCoefficients coef_;
  Grid1D grid_;
  double horizon_;
};

/// The dominated expectation E~_t[X] = -E_t[-X] over another engine.
class MirrorEngine final : public Engine {
 public:
  explicit MirrorEngine(const Engine& base) : base_(base) {}
  AdaptedField conditional(const Payoff& p, double t) const override;
  std::vector<double> sample(const Payoff& p) const override { return base_.sample(p); }
  std::string name() const override { return "mirror(" + base_.name() + ")"; }

 private:
  const Engine& base_;
};

struct StopRule {
  double tolerance = 1e-9;
  std::size_t max_k = std::size_t{1} << 14;
};

inline constexpr StopRule kTreeStop{1e-9, std::size_t{1} << 14};
inline constexpr StopRule kPdeStop{1e-3, std::size_t{1} << 14};

struct ExtensionResult {
  /// Field per refinement, in schedule order.
  std::vector<AdaptedField> values;
  /// Index (k or n) used for each entry of `values`.
  std::vector<std::size_t> indices;
  AdaptedField limit;
  std::size_t iterations = 0;
  bool converged = false;
  /// Max nodewise successive difference after each refinement (first entry is
  /// +inf: nothing to compare against).
  std::vector<double> cauchy_certificate;
  /// Total engine evaluations, including inner schemes.
  std::size_t evaluations = 0;

  /// limit for a single-node (t = 0) field.
  double scalar() const;
};

/// E_t[X] for X the Down limit of `scheme`, at k = 1, 2, 4, ... until the
/// successive difference is <= tolerance or k passes max_k (converged = false).
/// Throws VerificationError when a claimed-monotone scheme or the engine
/// values break monotonicity.
ExtensionResult extend_down(const Engine& engine, const MonotoneScheme& scheme, double t,
                            StopRule stop);

/// Upward extension: outer limits of inner extend_down runs, nondecreasing.
ExtensionResult extend_up(const Engine& engine, const DoubleScheme& scheme, double t,
                          StopRule stop);

/// A Down sequence of Down schemes: nonincreasing outer limits.
ExtensionResult extend_down_nested(const Engine& engine, const DoubleScheme& scheme, double t,
                                   StopRule stop);

struct L1Limit {
  double value;
  double bound;
};

/// Limit of a sequence certified Cauchy: certificate[n] bounds |x_m - x_n| for
/// all m >= n. Throws VerificationError when an observed difference breaks it.
L1Limit extend_l1(std::span<const double> values, std::span<const double> certificate);

struct FieldL1Limit {
  AdaptedField value;
  double bound;
};

/// Field version; the observed distance between fields F_n, F_m at level t is
/// Ê[|F_n - F_m|], computed on `tree`.
FieldL1Limit extend_l1(const ScenarioTree& tree, std::span<const AdaptedField> values,
                       std::span<const double> certificate);

enum class DominatedKind { Mirror };

/// Extension of the dominated expectation along a Down scheme.
ExtensionResult dominated_extend(DominatedKind kind, const Engine& engine,
                                 const MonotoneScheme& scheme, double t, StopRule stop);

/// Extension along an Up double scheme; the target must carry a negated Down
/// witness (X in -L^{1*}), otherwise PreconditionError.
ExtensionResult dominated_extend(DominatedKind kind, const Engine& engine,
                                 const DoubleScheme& scheme, double t, StopRule stop);

/// (E~[X_n], E~[X~_n]) with X_n = -I{sigma_high_sq - 1/n < <B>_1 < sigma_high_sq}
/// and X~_n = 0, on a T = 1 tree with `steps` steps.
std::pair<double, double> counterexample_run(const GCoefficients& coef,
                                             const VolatilityGrid& grid, int n, int steps,
                                             StopRule stop = kTreeStop);

}  // namespace gexp
