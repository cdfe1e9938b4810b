#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gexp/lattice.hpp"

namespace gexp {

// The representing family of the G-expectation, materialized on a path tree:
// each deterministic, history-dependent volatility choice induces one
// classical measure. On a finite tree the families P and P_max coincide in
// what they can distinguish, so only this one family is modeled.

/// One classical measure: a grid index for every node reachable under the
/// selection itself (-1 elsewhere). choice[k][node] for levels k < N.
struct VolSelection {
  std::vector<std::vector<int>> choice;

  int at(int level, std::size_t node) const {
    return choice[static_cast<std::size_t>(level)][node];
  }
  friend bool operator==(const VolSelection&, const VolSelection&) = default;
};

/// A set of nodes at one level of a path tree. At the terminal level this is
/// an event on paths; at an earlier level it is an F_t-measurable event.
class TreeEvent {
 public:
  TreeEvent(int level, std::vector<bool> members);

  static TreeEvent all(const ScenarioTree& tree, int level);
  static TreeEvent none(const ScenarioTree& tree, int level);
  /// Terminal event {pred(path)}.
  static TreeEvent from_predicate(const ScenarioTree& tree,
                                  const std::function<bool(const PathState&)>& pred);
  /// Level event from a predicate on node index.
  static TreeEvent from_nodes(const ScenarioTree& tree, int level,
                              const std::function<bool(std::size_t)>& pred);

  int level() const { return level_; }
  std::size_t size() const { return members_.size(); }
  bool contains(std::size_t node) const { return members_[node]; }
  const std::vector<bool>& members() const { return members_; }

  TreeEvent operator|(const TreeEvent& other) const;
  TreeEvent operator&(const TreeEvent& other) const;
  TreeEvent operator~() const;
  bool subset_of(const TreeEvent& other) const;
  bool empty() const;

 private:
  int level_;
  std::vector<bool> members_;
};

inline constexpr std::size_t kDefaultSelectionCap = 100'000;

/// m^(2^N - 1) selections on a path tree, saturating at cap + 1.
std::size_t selection_count(const ScenarioTree& tree, std::size_t cap = kDefaultSelectionCap);

/// Every deterministic selection, in lexicographic order of choices taken
/// level by level, ascending node index within a level. Throws CapExceeded.
std::vector<VolSelection> enumerate_selections(const ScenarioTree& tree,
                                               std::size_t cap = kDefaultSelectionCap);

/// The constant selection sigma_i on every reachable node.
VolSelection constant_selection(const ScenarioTree& tree, std::size_t vol_index);

/// Classical conditional expectations of a terminal field under `sel`:
/// element k holds E_sel[X | node] for reachable level-k nodes, NaN elsewhere.
std::vector<AdaptedField> classical_fields(const ScenarioTree& tree, const VolSelection& sel,
                                           const AdaptedField& terminal);

/// E_sel[p]: average over the 2^N equally weighted paths induced by `sel`.
double expect_under(const ScenarioTree& tree, const VolSelection& sel, const Payoff& p);

/// P_sel(A).
double probability(const ScenarioTree& tree, const VolSelection& sel, const TreeEvent& event);

struct CapacityResult {
  double value = 0.0;
  /// Index (lexicographic) of the first selection attaining the maximum.
  std::size_t argmax = 0;
};

/// c(A) = max over selections of P_sel(A), by enumeration.
CapacityResult capacity(const ScenarioTree& tree, const TreeEvent& event,
                        std::size_t cap = kDefaultSelectionCap);

struct RepresentationLimits {
  int max_steps = 4;
  std::size_t max_grid = 3;
  std::size_t selection_cap = kDefaultSelectionCap;
};

struct RepresentationReport {
  int level = 0;
  double max_gap = 0.0;
  std::vector<double> lattice_values;
  std::vector<double> sup_values;
  std::vector<double> node_gaps;
  /// Per node, index of the first selection attaining the supremum.
  std::vector<std::size_t> argmax;
};

/// Nodewise comparison of the backward-induction value at level t with the
/// maximum over selections (that reach the node) of the classical conditional
/// expectation.
RepresentationReport verify_representation(const ScenarioTree& tree, const Payoff& p, double t,
                                           RepresentationLimits limits = {});

/// Pastes selections along a partition of level-t nodes: before t all parts
/// must agree; from t on, descendants of a node in part i's event follow part
/// i. Throws PreconditionError on disagreement, overlap, or uncovered
/// reachable nodes.
VolSelection paste(const ScenarioTree& tree, int level,
                   std::span<const std::pair<TreeEvent, VolSelection>> parts);

}  // namespace gexp
