#include "gexp/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gexp {
namespace {

void require_path_tree(const ScenarioTree& tree, const char* what) {
  if (tree.recombination() != Recombination::Path)
    throw PreconditionError(std::string(what) + " needs a path tree");
}

// powers[d] = branching^d, for d = 0..N.
std::vector<std::size_t> branch_powers(const ScenarioTree& tree) {
  std::vector<std::size_t> p(static_cast<std::size_t>(tree.steps()) + 1, 1);
  for (std::size_t d = 1; d < p.size(); ++d) p[d] = p[d - 1] * tree.branching();
  return p;
}

void check_fields(const ScenarioTree& tree, std::span<const AdaptedField> fields) {
  if (fields.size() != static_cast<std::size_t>(tree.steps()) + 1)
    throw PreconditionError("stopped_field needs one field per tree level");
  for (int k = 0; k <= tree.steps(); ++k)
    if (fields[static_cast<std::size_t>(k)].size() != tree.level_size(k))
      throw PreconditionError("fields do not match the tree");
}

}  // namespace

StoppingRule::StoppingRule(const ScenarioTree& tree, std::vector<int> levels, int horizon_level,
                           std::string description)
    : levels_(std::move(levels)),
      horizon_level_(horizon_level),
      dt_(tree.dt()),
      description_(std::move(description)) {
  require_path_tree(tree, "a stopping rule");
  if (horizon_level_ < 0 || horizon_level_ > tree.steps())
    throw PreconditionError("stopping horizon is outside the tree");
  if (levels_.size() != tree.level_size(tree.steps()))
    throw PreconditionError("stopping rule needs one level per terminal path");
  for (int k : levels_)
    if (k < 0 || k > horizon_level_)
      throw PreconditionError("stop level " + std::to_string(k) + " outside [0, " +
                              std::to_string(horizon_level_) + "]");
}

StoppingRule StoppingRule::from_nodes(const ScenarioTree& tree, int horizon_level,
                                      const std::function<bool(int, std::size_t)>& stop_at,
                                      std::string description) {
  require_path_tree(tree, "a stopping rule");
  if (horizon_level < 0 || horizon_level > tree.steps())
    throw PreconditionError("stopping horizon is outside the tree");
  const std::size_t b = tree.branching();
  std::vector<int> cur{stop_at(0, 0) || horizon_level == 0 ? 0 : -1};
  for (int k = 1; k <= tree.steps(); ++k) {
    std::vector<int> next(tree.level_size(k));
    for (std::size_t n = 0; n < next.size(); ++n) {
      const int parent = cur[n / b];
      if (parent >= 0) {
        next[n] = parent;
      } else if (k == horizon_level || stop_at(k, n)) {
        next[n] = k;
      } else {
        next[n] = -1;
      }
    }
    cur.swap(next);
  }
  return StoppingRule(tree, std::move(cur), horizon_level, std::move(description));
}

StoppingRule StoppingRule::min(const StoppingRule& other) const {
  if (other.levels_.size() != levels_.size() || other.dt_ != dt_)
    throw PreconditionError("rules live on different trees");
  StoppingRule out = *this;
  for (std::size_t j = 0; j < levels_.size(); ++j)
    out.levels_[j] = std::min(levels_[j], other.levels_[j]);
  out.horizon_level_ = std::max(horizon_level_, other.horizon_level_);
  out.description_ = "min(" + description_ + "," + other.description_ + ")";
  return out;
}

StoppingRule StoppingRule::min(int level) const {
  StoppingRule out = *this;
  for (auto& k : out.levels_) k = std::min(k, level);
  out.description_ = "min(" + description_ + "," + std::to_string(level) + ")";
  return out;
}

StoppingRule exit_time(const ScenarioTree& tree, const ClosedSet& set, double horizon) {
  if (set.empty()) throw PreconditionError("exit set is empty");
  const int h = tree.level_of_time(horizon);
  return StoppingRule::from_nodes(
      tree, h,
      [&](int k, std::size_t n) { return !set.contains(tree.level(k)[n].x); },
      "exit:" + set.to_string());
}

StoppingRule constant_time(const ScenarioTree& tree, double t) {
  require_path_tree(tree, "a stopping rule");
  const int k = tree.level_of_time(t);
  return StoppingRule(tree, std::vector<int>(tree.level_size(tree.steps()), k), tree.steps(),
                      "const:" + std::to_string(t));
}

bool is_star_stopping(const ScenarioTree& tree, const StoppingRule& rule) {
  if (tree.recombination() != Recombination::Path) return false;
  const int n = tree.steps();
  if (rule.paths() != tree.level_size(n) || rule.horizon_level() > n) return false;
  std::vector<int> lo(rule.levels().begin(), rule.levels().end());
  std::vector<int> hi = lo;
  const std::size_t b = tree.branching();
  for (int k = n; k >= 0; --k) {
    for (std::size_t j = 0; j < lo.size(); ++j)
      if (lo[j] <= k && lo[j] != hi[j]) return false;
    if (k == 0) break;
    std::vector<int> plo(tree.level_size(k - 1));
    std::vector<int> phi(plo.size());
    for (std::size_t p = 0; p < plo.size(); ++p) {
      plo[p] = *std::min_element(lo.begin() + static_cast<long>(p * b),
                                 lo.begin() + static_cast<long>((p + 1) * b));
      phi[p] = *std::max_element(hi.begin() + static_cast<long>(p * b),
                                 hi.begin() + static_cast<long>((p + 1) * b));
    }
    lo.swap(plo);
    hi.swap(phi);
  }
  return std::all_of(rule.levels().begin(), rule.levels().end(),
                     [&](int k) { return k <= rule.horizon_level(); });
}

StoppingRule dyadic(const ScenarioTree& tree, const StoppingRule& rule, int n) {
  if (n < 0 || n > 30) throw PreconditionError("dyadic level must be in [0, 30]");
  const int big_k = rule.horizon_level();
  const long cells = 1L << n;
  if (big_k % cells != 0)
    throw PreconditionError("time lattice with " + std::to_string(big_k) +
                            " steps does not refine the dyadic grid 2^" + std::to_string(n));
  const int h = static_cast<int>(big_k / cells);
  std::vector<int> out(rule.levels().begin(), rule.levels().end());
  for (auto& k : out) k = k < big_k ? (k / h + 1) * h : big_k;
  return StoppingRule(tree, std::move(out), big_k,
                      "dyadic" + std::to_string(n) + "(" + rule.description() + ")");
}

std::vector<std::uint64_t> dyadic_times(const StoppingRule& rule, int n) {
  if (n < 0 || n > 40) throw PreconditionError("dyadic level must be in [0, 40]");
  const auto big_k = static_cast<std::uint64_t>(rule.horizon_level());
  const std::uint64_t cells = std::uint64_t{1} << n;
  std::vector<std::uint64_t> out(rule.paths());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto k = static_cast<std::uint64_t>(rule.level(j));
    out[j] = k < big_k ? k * cells / big_k + 1 : cells;
  }
  return out;
}

int dyadic_level(std::uint64_t numerator, int n, int horizon_level) {
  return static_cast<int>(numerator * static_cast<std::uint64_t>(horizon_level) >> n);
}

AdaptedField stopped_field(const ScenarioTree& tree, std::span<const AdaptedField> fields,
                           std::span<const int> levels) {
  require_path_tree(tree, "stopped_field");
  check_fields(tree, fields);
  const int n = tree.steps();
  if (levels.size() != tree.level_size(n))
    throw PreconditionError("stop levels do not match the tree");
  const auto pw = branch_powers(tree);
  AdaptedField out{n, std::vector<double>(levels.size())};
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const int k = levels[j];
    if (k < 0 || k > n) throw PreconditionError("stop level outside the tree");
    out.values[j] = fields[static_cast<std::size_t>(k)][j / pw[static_cast<std::size_t>(n - k)]];
  }
  return out;
}

AdaptedField stopped_field(const ScenarioTree& tree, std::span<const AdaptedField> fields,
                           const StoppingRule& rule) {
  return stopped_field(tree, fields, rule.levels());
}

OptionalStoppingReport optional_stopping_check(const ScenarioTree& tree, const Payoff& xi,
                                               const StoppingRule& sigma,
                                               const StoppingRule& tau) {
  if (!(tree.coefficients().sigma_low_sq() > 0.0))
    throw PreconditionError(
        "optional stopping needs a nondegenerate generator (sigma_low_sq > 0)");
  require_path_tree(tree, "optional_stopping_check");
  if (!is_star_stopping(tree, sigma) || !is_star_stopping(tree, tau))
    throw PreconditionError("optional stopping needs *-stopping times");
  for (std::size_t j = 0; j < tau.paths(); ++j)
    if (sigma.level(j) > tau.level(j))
      throw PreconditionError("sigma <= tau fails on path " + std::to_string(j));

  const int n = tree.steps();
  const auto pw = branch_powers(tree);
  const auto m = backward_induct(tree, xi);
  const auto e = induct(tree, stopped_field(tree, m, tau));

  OptionalStoppingReport r;
  r.m0 = m[0][0];
  r.level_gaps.assign(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    const auto& ek = e[static_cast<std::size_t>(k)];
    double gap = 0.0;
    for (std::size_t node = 0; node < ek.size(); ++node) {
      const std::size_t path = node * pw[static_cast<std::size_t>(n - k)];
      const int s = std::min(tau.level(path), k);
      const double ms = m[static_cast<std::size_t>(s)][path / pw[static_cast<std::size_t>(n - s)]];
      gap = std::max(gap, std::abs(ek[node] - ms));
    }
    r.level_gaps[static_cast<std::size_t>(k)] = gap;
    r.max_gap = std::max(r.max_gap, gap);
  }
  for (std::size_t j = 0; j < sigma.paths(); ++j) {
    const int s = sigma.level(j);
    const std::size_t node = j / pw[static_cast<std::size_t>(n - s)];
    r.sigma_gap = std::max(r.sigma_gap, std::abs(e[static_cast<std::size_t>(s)][node] -
                                                 m[static_cast<std::size_t>(s)][node]));
  }
  return r;
}

std::vector<AdaptedField> dyadic_stopped_fields(const ScenarioTree& tree, const Payoff& xi,
                                                const StoppingRule& tau, int n_max) {
  require_path_tree(tree, "dyadic_stopped_fields");
  const auto m = backward_induct(tree, xi);
  std::vector<AdaptedField> out;
  std::vector<int> levels(tau.paths());
  for (int n = 0; n <= n_max; ++n) {
    const auto times = dyadic_times(tau, n);
    for (std::size_t j = 0; j < levels.size(); ++j)
      levels[j] = dyadic_level(times[j], n, tau.horizon_level());
    out.push_back(stopped_field(tree, m, levels));
  }
  return out;
}

std::vector<double> dyadic_convergence(const ScenarioTree& tree, const Payoff& xi,
                                       const StoppingRule& tau, int n_max) {
  const auto fields = dyadic_stopped_fields(tree, xi, tau, n_max);
  const auto m_tau = stopped_field(tree, backward_induct(tree, xi), tau);
  std::vector<double> out;
  for (const auto& f : fields) {
    AdaptedField diff{f.level, std::vector<double>(f.size())};
    for (std::size_t j = 0; j < f.size(); ++j) diff.values[j] = std::abs(f[j] - m_tau[j]);
    out.push_back(induct(tree, diff).front()[0]);
  }
  return out;
}

std::vector<AdaptedField> quadratic_variation(const ScenarioTree& tree) {
  if (tree.recombination() == Recombination::Position)
    throw PreconditionError("a position-keyed tree does not track quadratic variation");
  std::vector<AdaptedField> out;
  for (int k = 0; k <= tree.steps(); ++k) {
    AdaptedField f{k, {}};
    for (const auto& node : tree.level(k)) f.values.push_back(node.q);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace gexp
