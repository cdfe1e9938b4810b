#include "gexp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gexp {
namespace {

void require_path_tree(const ScenarioTree& tree) {
  if (tree.recombination() != Recombination::Path)
    throw PreconditionError("selections live on a non-recombined (path) tree");
}

void check_event(const ScenarioTree& tree, const TreeEvent& e) {
  if (e.level() < 0 || e.level() > tree.steps() || e.size() != tree.level_size(e.level()))
    throw PreconditionError("event does not match the tree");
}

void check_selection(const ScenarioTree& tree, const VolSelection& sel) {
  if (sel.choice.size() != static_cast<std::size_t>(tree.steps()))
    throw PreconditionError("selection has the wrong number of levels");
  for (int k = 0; k < tree.steps(); ++k) {
    if (sel.choice[static_cast<std::size_t>(k)].size() != tree.level_size(k))
      throw PreconditionError("selection level " + std::to_string(k) + " has the wrong size");
  }
}

VolSelection empty_selection(const ScenarioTree& tree) {
  VolSelection s;
  s.choice.resize(static_cast<std::size_t>(tree.steps()));
  for (int k = 0; k < tree.steps(); ++k) s.choice[static_cast<std::size_t>(k)].assign(tree.level_size(k), -1);
  return s;
}

struct Enumerator {
  const ScenarioTree& tree;
  std::vector<VolSelection>& out;
  VolSelection current;

  void level(int k, const std::vector<std::size_t>& reachable) {
    if (k == tree.steps()) {
      out.push_back(current);
      return;
    }
    const std::size_t m = tree.grid().size();
    const std::size_t b = tree.branching();
    auto& row = current.choice[static_cast<std::size_t>(k)];
    std::vector<std::size_t> digits(reachable.size(), 0);
    std::vector<std::size_t> next;
    while (true) {
      std::fill(row.begin(), row.end(), -1);
      next.clear();
      for (std::size_t r = 0; r < reachable.size(); ++r) {
        row[reachable[r]] = static_cast<int>(digits[r]);
        next.push_back(reachable[r] * b + 2 * digits[r]);
        next.push_back(reachable[r] * b + 2 * digits[r] + 1);
      }
      level(k + 1, next);
      // Odometer with the first reachable node most significant.
      std::size_t pos = digits.size();
      while (pos > 0) {
        --pos;
        if (++digits[pos] < m) break;
        digits[pos] = 0;
        if (pos == 0) return;
      }
      if (digits.empty()) return;
    }
  }
};

}  // namespace

TreeEvent::TreeEvent(int level, std::vector<bool> members)
    : level_(level), members_(std::move(members)) {}

TreeEvent TreeEvent::all(const ScenarioTree& tree, int level) {
  return TreeEvent(level, std::vector<bool>(tree.level_size(level), true));
}

TreeEvent TreeEvent::none(const ScenarioTree& tree, int level) {
  return TreeEvent(level, std::vector<bool>(tree.level_size(level), false));
}

TreeEvent TreeEvent::from_predicate(const ScenarioTree& tree,
                                    const std::function<bool(const PathState&)>& pred) {
  const int n = tree.steps();
  std::vector<bool> members(tree.level_size(n));
  std::vector<double> buffer;
  for (std::size_t j = 0; j < members.size(); ++j) members[j] = pred(terminal_state(tree, j, buffer));
  return TreeEvent(n, std::move(members));
}

TreeEvent TreeEvent::from_nodes(const ScenarioTree& tree, int level,
                                const std::function<bool(std::size_t)>& pred) {
  std::vector<bool> members(tree.level_size(level));
  for (std::size_t j = 0; j < members.size(); ++j) members[j] = pred(j);
  return TreeEvent(level, std::move(members));
}

TreeEvent TreeEvent::operator|(const TreeEvent& o) const {
  if (o.level_ != level_ || o.size() != size()) throw PreconditionError("events live on different levels");
  std::vector<bool> m(size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = members_[i] || o.members_[i];
  return TreeEvent(level_, std::move(m));
}

TreeEvent TreeEvent::operator&(const TreeEvent& o) const {
  if (o.level_ != level_ || o.size() != size()) throw PreconditionError("events live on different levels");
  std::vector<bool> m(size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = members_[i] && o.members_[i];
  return TreeEvent(level_, std::move(m));
}

TreeEvent TreeEvent::operator~() const {
  std::vector<bool> m(size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = !members_[i];
  return TreeEvent(level_, std::move(m));
}

bool TreeEvent::subset_of(const TreeEvent& o) const {
  for (std::size_t i = 0; i < size(); ++i)
    if (members_[i] && !o.members_[i]) return false;
  return true;
}

bool TreeEvent::empty() const {
  for (bool b : members_)
    if (b) return false;
  return true;
}

std::size_t selection_count(const ScenarioTree& tree, std::size_t cap) {
  require_path_tree(tree);
  // Level k has 2^k reachable nodes under any selection.
  const double log_count = (std::pow(2.0, tree.steps()) - 1.0) *
                           std::log(static_cast<double>(tree.grid().size()));
  if (log_count > std::log(static_cast<double>(cap)) + 1e-9) return cap + 1;
  std::size_t count = 1;
  for (std::size_t i = 0; i + 1 < (std::size_t{1} << tree.steps()); ++i) count *= tree.grid().size();
  return count;
}

std::vector<VolSelection> enumerate_selections(const ScenarioTree& tree, std::size_t cap) {
  const std::size_t count = selection_count(tree, cap);
  if (count > cap)
    throw CapExceeded("selection enumeration exceeds the cap of " + std::to_string(cap));
  std::vector<VolSelection> out;
  out.reserve(count);
  Enumerator e{tree, out, empty_selection(tree)};
  e.level(0, {0});
  return out;
}

VolSelection constant_selection(const ScenarioTree& tree, std::size_t vol_index) {
  require_path_tree(tree);
  if (vol_index >= tree.grid().size()) throw PreconditionError("grid index out of range");
  VolSelection s = empty_selection(tree);
  std::vector<std::size_t> reachable{0}, next;
  const std::size_t b = tree.branching();
  for (int k = 0; k < tree.steps(); ++k) {
    next.clear();
    for (auto r : reachable) {
      s.choice[static_cast<std::size_t>(k)][r] = static_cast<int>(vol_index);
      next.push_back(r * b + 2 * vol_index);
      next.push_back(r * b + 2 * vol_index + 1);
    }
    reachable.swap(next);
  }
  return s;
}

std::vector<AdaptedField> classical_fields(const ScenarioTree& tree, const VolSelection& sel,
                                           const AdaptedField& terminal) {
  require_path_tree(tree);
  check_selection(tree, sel);
  const int n = tree.steps();
  if (terminal.level != n || terminal.size() != tree.level_size(n))
    throw PreconditionError("classical_fields needs a terminal field");
  const std::size_t m = tree.grid().size();
  const std::size_t b = tree.branching();

  // Forward pass: nodes reachable under the selection.
  std::vector<std::vector<bool>> reachable(static_cast<std::size_t>(n) + 1);
  reachable[0] = {true};
  for (int k = 0; k < n; ++k) {
    const auto& row = sel.choice[static_cast<std::size_t>(k)];
    auto& next = reachable[static_cast<std::size_t>(k) + 1];
    next.assign(tree.level_size(k + 1), false);
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (!reachable[static_cast<std::size_t>(k)][v]) continue;
      const int c = row[v];
      if (c < 0 || static_cast<std::size_t>(c) >= m)
        throw PreconditionError("inconsistent selection: reachable node " + std::to_string(v) +
                                " at level " + std::to_string(k) + " has no valid choice");
      next[v * b + 2 * static_cast<std::size_t>(c)] = true;
      next[v * b + 2 * static_cast<std::size_t>(c) + 1] = true;
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<AdaptedField> fields(static_cast<std::size_t>(n) + 1);
  fields.back() = terminal;
  for (int k = n - 1; k >= 0; --k) {
    auto& out = fields[static_cast<std::size_t>(k)];
    const auto& below = fields[static_cast<std::size_t>(k) + 1].values;
    out.level = k;
    out.values.assign(tree.level_size(k), nan);
    const auto& row = sel.choice[static_cast<std::size_t>(k)];
    for (std::size_t v = 0; v < row.size(); ++v) {
      if (!reachable[static_cast<std::size_t>(k)][v]) continue;
      const auto c = static_cast<std::size_t>(row[v]);
      out.values[v] = 0.5 * (below[static_cast<std::size_t>(tree.child(k, v, c, Sign::Up))] +
                             below[static_cast<std::size_t>(tree.child(k, v, c, Sign::Down))]);
    }
  }
  return fields;
}

double expect_under(const ScenarioTree& tree, const VolSelection& sel, const Payoff& p) {
  return classical_fields(tree, sel, terminal_field(tree, p)).front().values.front();
}

double probability(const ScenarioTree& tree, const VolSelection& sel, const TreeEvent& event) {
  check_event(tree, event);
  AdaptedField ind{event.level(), std::vector<double>(event.size())};
  for (std::size_t j = 0; j < ind.size(); ++j) ind.values[j] = event.contains(j) ? 1.0 : 0.0;
  return classical_fields(tree, sel, lift_to_terminal(tree, ind)).front().values.front();
}

CapacityResult capacity(const ScenarioTree& tree, const TreeEvent& event, std::size_t cap) {
  check_event(tree, event);
  const auto selections = enumerate_selections(tree, cap);
  CapacityResult best{-1.0, 0};
  for (std::size_t s = 0; s < selections.size(); ++s) {
    const double p = probability(tree, selections[s], event);
    if (p > best.value) best = {p, s};
  }
  return best;
}

RepresentationReport verify_representation(const ScenarioTree& tree, const Payoff& p, double t,
                                           RepresentationLimits limits) {
  require_path_tree(tree);
  if (tree.steps() > limits.max_steps || tree.grid().size() > limits.max_grid)
    throw CapExceeded("representation check is limited to N <= " +
                      std::to_string(limits.max_steps) + ", m <= " +
                      std::to_string(limits.max_grid));
  const int level = tree.level_of_time(t);
  const auto terminal = terminal_field(tree, p);
  const auto lattice = induct(tree, terminal);
  const auto selections = enumerate_selections(tree, limits.selection_cap);

  RepresentationReport rep;
  rep.level = level;
  rep.lattice_values = lattice[static_cast<std::size_t>(level)].values;
  const std::size_t width = rep.lattice_values.size();
  rep.sup_values.assign(width, -std::numeric_limits<double>::infinity());
  rep.argmax.assign(width, 0);
  for (std::size_t s = 0; s < selections.size(); ++s) {
    const auto fields = classical_fields(tree, selections[s], terminal);
    const auto& vals = fields[static_cast<std::size_t>(level)].values;
    for (std::size_t v = 0; v < width; ++v) {
      if (!std::isnan(vals[v]) && vals[v] > rep.sup_values[v]) {
        rep.sup_values[v] = vals[v];
        rep.argmax[v] = s;
      }
    }
  }
  rep.node_gaps.resize(width);
  for (std::size_t v = 0; v < width; ++v) {
    rep.node_gaps[v] = std::abs(rep.lattice_values[v] - rep.sup_values[v]);
    rep.max_gap = std::max(rep.max_gap, rep.node_gaps[v]);
  }
  return rep;
}

VolSelection paste(const ScenarioTree& tree, int level,
                   std::span<const std::pair<TreeEvent, VolSelection>> parts) {
  require_path_tree(tree);
  if (parts.empty()) throw PreconditionError("paste needs at least one part");
  if (level < 0 || level > tree.steps()) throw PreconditionError("paste level out of range");
  for (const auto& [event, sel] : parts) {
    check_selection(tree, sel);
    if (event.level() != level) throw PreconditionError("paste events must live on the paste level");
    check_event(tree, event);
  }
  const VolSelection& base = parts.front().second;
  for (const auto& [event, sel] : parts) {
    for (int k = 0; k < level; ++k) {
      if (sel.choice[static_cast<std::size_t>(k)] != base.choice[static_cast<std::size_t>(k)])
        throw PreconditionError("paste parts disagree before the paste level");
    }
  }

  // Level-`level` nodes reachable under the shared prefix.
  std::vector<bool> reachable(tree.level_size(level), level == 0);
  if (level > 0) {
    const auto& row = base.choice[static_cast<std::size_t>(level) - 1];
    for (std::size_t v = 0; v < reachable.size(); ++v) {
      const int c = row[v / tree.branching()];
      reachable[v] = c >= 0 && (v % tree.branching()) / 2 == static_cast<std::size_t>(c);
    }
  }

  std::vector<int> owner(tree.level_size(level), -1);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t v = 0; v < owner.size(); ++v) {
      if (!parts[i].first.contains(v)) continue;
      if (owner[v] >= 0) throw PreconditionError("paste events overlap");
      owner[v] = static_cast<int>(i);
    }
  }
  for (std::size_t v = 0; v < owner.size(); ++v) {
    if (reachable[v] && owner[v] < 0)
      throw PreconditionError("paste events do not cover every reachable node");
  }

  VolSelection out = empty_selection(tree);
  for (int k = 0; k < level; ++k) out.choice[static_cast<std::size_t>(k)] = base.choice[static_cast<std::size_t>(k)];
  const std::size_t b = tree.branching();
  for (std::size_t u = 0; u < owner.size(); ++u) {
    if (owner[u] < 0) continue;
    const auto& src = parts[static_cast<std::size_t>(owner[u])].second;
    std::size_t lo = u, width = 1;
    for (int k = level; k < tree.steps(); ++k) {
      auto& dst_row = out.choice[static_cast<std::size_t>(k)];
      const auto& src_row = src.choice[static_cast<std::size_t>(k)];
      std::copy(src_row.begin() + static_cast<std::ptrdiff_t>(lo),
                src_row.begin() + static_cast<std::ptrdiff_t>(lo + width),
                dst_row.begin() + static_cast<std::ptrdiff_t>(lo));
      lo *= b;
      width *= b;
    }
  }
  return out;
}

}  // namespace gexp
