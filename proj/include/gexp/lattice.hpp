#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gexp/core.hpp"
#include "gexp/payoff.hpp"

namespace gexp {

/// How nodes at a level are identified.
enum class Recombination {
  /// No recombination: one node per (volatility, sign) history. Required by
  /// path functionals, cylinder payoffs, selections and stopping rules.
  Path,
  /// Nodes keyed on the (position, quadratic variation) pair.
  State,
  /// Nodes keyed on position alone. Exact for payoffs that do not read the
  /// quadratic variation, because the one-step operator is Markov in x; node
  /// quadratic variation is then undefined (NaN).
  Position,
};

struct TreeOptions {
  Recombination recombination = Recombination::State;
  std::size_t node_cap = 2'000'000;
};

struct TreeNode {
  double x;
  double q;
};

enum class Sign : std::uint8_t { Up = 0, Down = 1 };

/// Finite adversarial-volatility scenario tree on [0, T] with N steps.
///
/// From state (x, q) the child for grid index i and sign s is
/// (x +/- sigma_i sqrt(dt), q + sigma_i^2 dt). Children of node n at level k
/// are stored at children(k)[n * 2m + 2i + s].
class ScenarioTree {
 public:
  ScenarioTree(GCoefficients coef, VolatilityGrid grid, int steps, double horizon,
               TreeOptions options);

  const GCoefficients& coefficients() const { return coef_; }
  const VolatilityGrid& grid() const { return grid_; }
  int steps() const { return steps_; }
  double horizon() const { return horizon_; }
  double dt() const { return dt_; }
  Recombination recombination() const { return options_.recombination; }
  std::size_t branching() const { return 2 * grid_.size(); }

  std::size_t level_size(int k) const { return levels_[static_cast<std::size_t>(k)].size(); }
  std::span<const TreeNode> level(int k) const { return levels_[static_cast<std::size_t>(k)]; }
  /// Child index table of level k < N.
  std::span<const std::int32_t> children(int k) const {
    return children_[static_cast<std::size_t>(k)];
  }
  std::int32_t child(int k, std::size_t node, std::size_t vol, Sign s) const {
    return children_[static_cast<std::size_t>(k)][node * branching() + 2 * vol +
                                                  static_cast<std::size_t>(s)];
  }
  std::size_t node_count() const;

  double time(int k) const { return static_cast<double>(k) * dt_; }
  /// Level whose time is t; throws PreconditionError when t is off the lattice.
  int level_of_time(double t) const;

  /// Accumulated lower/upper quadratic-variation bounds at level k, summed in
  /// the same floating-point order as node states are built.
  std::pair<double, double> qv_bounds(int k) const {
    return qv_bounds_[static_cast<std::size_t>(k)];
  }

  // -- path-tree helpers (throw unless recombination() == Path) -------------
  /// Level-`to` ancestor of `node` at level k.
  std::size_t ancestor(int k, std::size_t node, int to) const;
  /// Grid index and sign of the last step into `node` (level k >= 1).
  std::pair<std::size_t, Sign> last_step(int k, std::size_t node) const;
  /// Positions x_0, ..., x_k along the path to `node`.
  std::vector<double> path_positions(int k, std::size_t node) const;

 private:
  void build_path_tree();
  void build_recombined_tree();
  void require_path() const;

  GCoefficients coef_;
  VolatilityGrid grid_;
  int steps_;
  double horizon_;
  double dt_;
  TreeOptions options_;
  std::vector<std::vector<TreeNode>> levels_;
  std::vector<std::vector<std::int32_t>> children_;
  std::vector<std::pair<double, double>> qv_bounds_;
};

/// Builds the tree; throws CapExceeded when the node count would exceed
/// options.node_cap.
ScenarioTree build_tree(const GCoefficients& coef, const VolatilityGrid& grid, int steps,
                        double horizon, TreeOptions options = {});

/// The cheapest recombination mode that can evaluate `p`.
Recombination recombination_for(const Payoff& p);

/// max_i 1/2 (v(i,+) + v(i,-)) with child_values laid out as
/// [v(0,+), v(0,-), v(1,+), v(1,-), ...].
double one_step_expect(std::span<const double> child_values);

/// Payoff evaluated on every terminal node.
AdaptedField terminal_field(const ScenarioTree& tree, const Payoff& p);

/// Conditional expectations of the level-`from.level` field: element k of the
/// result is the level-k field, for k = 0..from.level.
std::vector<AdaptedField> induct(const ScenarioTree& tree, const AdaptedField& from);

/// Fields of Ê_t[p] for every lattice time; element k is level k.
std::vector<AdaptedField> backward_induct(const ScenarioTree& tree, const Payoff& p);

/// Ê[p]: root of backward_induct.
double expect(const ScenarioTree& tree, const Payoff& p);

/// Ê[p] on a freshly built tree whose recombination suits `p`.
double expect(const GCoefficients& coef, const VolatilityGrid& grid, int steps, double horizon,
              const Payoff& p, std::size_t node_cap = 2'000'000);

/// The level-k field for t = k dt.
AdaptedField condition_at(std::span<const AdaptedField> fields, const ScenarioTree& tree,
                          double t);

/// PathState seen by payoffs at a terminal node; `positions_buffer` backs the
/// span for path trees.
PathState terminal_state(const ScenarioTree& tree, std::size_t node,
                         std::vector<double>& positions_buffer);

/// Level-t field lifted to the terminal level of a path tree (constant on each
/// level-t subtree).
AdaptedField lift_to_terminal(const ScenarioTree& tree, const AdaptedField& field);

}  // namespace gexp
