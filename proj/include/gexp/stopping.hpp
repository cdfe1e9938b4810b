#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gexp/lattice.hpp"
#include "gexp/sets.hpp"

namespace gexp {

/// A random time on a path tree, held as the stop level of every terminal
/// path. Rules built from node predicates are adapted by construction; rules
/// built from raw levels may anticipate, which is_star_stopping detects.
class StoppingRule {
 public:
  /// levels[j] is the stop level of terminal path j; horizon_level caps them.
  StoppingRule(const ScenarioTree& tree, std::vector<int> levels, int horizon_level,
               std::string description);

  /// Stops at the first node (level k, node) along each path where
  /// stop_at(k, node) holds, else at the horizon.
  static StoppingRule from_nodes(const ScenarioTree& tree, int horizon_level,
                                 const std::function<bool(int, std::size_t)>& stop_at,
                                 std::string description);

  int level(std::size_t path) const { return levels_[path]; }
  std::span<const int> levels() const { return levels_; }
  int horizon_level() const { return horizon_level_; }
  double dt() const { return dt_; }
  double time(std::size_t path) const { return static_cast<double>(levels_[path]) * dt_; }
  std::size_t paths() const { return levels_.size(); }
  const std::string& description() const { return description_; }

  /// Pathwise minimum.
  StoppingRule min(const StoppingRule& other) const;
  /// Pathwise minimum with the constant level k.
  StoppingRule min(int level) const;

 private:
  std::vector<int> levels_;
  int horizon_level_;
  double dt_;
  std::string description_;
};

/// inf{t : X_t not in F} capped at T, on lattice times.
StoppingRule exit_time(const ScenarioTree& tree, const ClosedSet& set, double horizon);

/// tau = t on every path, with the tree's horizon.
StoppingRule constant_time(const ScenarioTree& tree, double t);

/// Adaptedness ({tau <= k} and tau on it are fixed by the level-k node) plus
/// tau <= horizon <= N.
bool is_star_stopping(const ScenarioTree& tree, const StoppingRule& rule);

/// tau rounded up to the dyadic grid of mesh T 2^-n, as a lattice rule.
/// Throws PreconditionError unless the horizon level is a multiple of 2^n.
StoppingRule dyadic(const ScenarioTree& tree, const StoppingRule& rule, int n);

/// Dyadic times in exact integer form: entry j is i with tau^n = i T 2^-n on
/// path j. No lattice condition.
std::vector<std::uint64_t> dyadic_times(const StoppingRule& rule, int n);

/// Level of the step embedding of the time i T 2^-n: floor(i K / 2^n) for
/// horizon level K.
int dyadic_level(std::uint64_t numerator, int n, int horizon_level);

/// Terminal field of M_tau: M at the node where each path stops. `fields` are
/// the per-level fields of M (as from backward_induct on `tree`).
AdaptedField stopped_field(const ScenarioTree& tree, std::span<const AdaptedField> fields,
                           const StoppingRule& rule);

/// Same with explicit per-path stop levels.
AdaptedField stopped_field(const ScenarioTree& tree, std::span<const AdaptedField> fields,
                           std::span<const int> levels);

struct OptionalStoppingReport {
  double max_gap = 0.0;
  /// max over level-k nodes of |Ê_k[M_tau] - M_{k ^ tau}|.
  std::vector<double> level_gaps;
  /// max over paths of |Ê_sigma[M_tau] - M_sigma| at the sigma-stop node.
  double sigma_gap = 0.0;
  double m0 = 0.0;
};

/// Checks Ê_t[M_tau] = M_{t ^ tau} nodewise and Ê_sigma[M_tau] = M_sigma for
/// M_t = Ê_t[xi]. Throws PreconditionError when sigma_low_sq = 0, the rules
/// are not *-stopping times, or sigma <= tau fails on some path.
OptionalStoppingReport optional_stopping_check(const ScenarioTree& tree, const Payoff& xi,
                                               const StoppingRule& sigma,
                                               const StoppingRule& tau);

/// Ê[|M_{tau^n} - M_tau|] for n = 0..n_max, M off the lattice taken as the
/// step embedding of dyadic_level.
std::vector<double> dyadic_convergence(const ScenarioTree& tree, const Payoff& xi,
                                       const StoppingRule& tau, int n_max);

/// Terminal fields of M_{tau^n} for n = 0..n_max (inputs for extend_l1).
std::vector<AdaptedField> dyadic_stopped_fields(const ScenarioTree& tree, const Payoff& xi,
                                                const StoppingRule& tau, int n_max);

/// The q component per node, level by level. Throws on a position-keyed tree.
std::vector<AdaptedField> quadratic_variation(const ScenarioTree& tree);

}  // namespace gexp
