#include "gexp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "gexp/kernels.hpp"

namespace gexp {
namespace {

constexpr double kQuantum = 1e-12;

struct Key {
  std::int64_t qx;
  std::int64_t qq;
  bool operator==(const Key&) const = default;
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.qx) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.qq) + 0x632BE59BD9B4E019ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

std::size_t projected_path_nodes(std::size_t branching, int steps, std::size_t cap) {
  std::size_t total = 0;
  std::size_t width = 1;
  for (int k = 0; k <= steps; ++k) {
    total += width;
    if (total > cap) return cap + 1;
    if (k < steps) {
      if (width > (cap + 1) / branching + 1) return cap + 1;
      width *= branching;
    }
  }
  return total;
}

}  // namespace

ScenarioTree::ScenarioTree(GCoefficients coef, VolatilityGrid grid, int steps, double horizon,
                           TreeOptions options)
    : coef_(coef),
      grid_(std::move(grid)),
      steps_(steps),
      horizon_(horizon),
      dt_(0.0),
      options_(options) {
  if (steps_ < 1) throw PreconditionError("tree needs N >= 1 steps");
  if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
    throw PreconditionError("tree horizon T must be positive and finite");
  if (std::abs(grid_.variance(0) - coef_.sigma_low_sq()) > 0.0 ||
      std::abs(grid_.variance(grid_.size() - 1) - coef_.sigma_high_sq()) > 0.0)
    throw PreconditionError("volatility grid is inconsistent with the coefficients");
  dt_ = horizon_ / static_cast<double>(steps_);

  qv_bounds_.resize(static_cast<std::size_t>(steps_) + 1, {0.0, 0.0});
  const double lo_inc = grid_.variance(0) * dt_;
  const double hi_inc = grid_.variance(grid_.size() - 1) * dt_;
  for (std::size_t k = 1; k < qv_bounds_.size(); ++k) {
    qv_bounds_[k] = {qv_bounds_[k - 1].first + lo_inc, qv_bounds_[k - 1].second + hi_inc};
  }

  if (options_.recombination == Recombination::Path) {
    build_path_tree();
  } else {
    build_recombined_tree();
  }
}

void ScenarioTree::build_path_tree() {
  const std::size_t b = branching();
  if (projected_path_nodes(b, steps_, options_.node_cap) > options_.node_cap)
    throw CapExceeded("path tree with N=" + std::to_string(steps_) + ", m=" +
                      std::to_string(grid_.size()) + " exceeds the node cap of " +
                      std::to_string(options_.node_cap));
  const double sqdt = std::sqrt(dt_);
  levels_.assign(1, {TreeNode{0.0, 0.0}});
  children_.clear();
  for (int k = 0; k < steps_; ++k) {
    const auto& cur = levels_.back();
    std::vector<TreeNode> next(cur.size() * b);
    std::vector<std::int32_t> kids(cur.size() * b);
    for (std::size_t n = 0; n < cur.size(); ++n) {
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        const double dx = grid_.volatility(i) * sqdt;
        const double dq = grid_.variance(i) * dt_;
        const std::size_t up = n * b + 2 * i;
        next[up] = {cur[n].x + dx, cur[n].q + dq};
        next[up + 1] = {cur[n].x - dx, cur[n].q + dq};
        kids[up] = static_cast<std::int32_t>(up);
        kids[up + 1] = static_cast<std::int32_t>(up + 1);
      }
    }
    children_.push_back(std::move(kids));
    levels_.push_back(std::move(next));
  }
}

void ScenarioTree::build_recombined_tree() {
  const bool keep_q = options_.recombination == Recombination::State;
  const std::size_t b = branching();
  const std::size_t m = grid_.size();
  const double sqdt = std::sqrt(dt_);
  const double x_scale = std::sqrt(coef_.sigma_high_sq() * horizon_);
  const double q_scale = coef_.sigma_high_sq() * horizon_;
  const double x_quantum = kQuantum * (x_scale > 0.0 ? x_scale : 1.0);
  const double q_quantum = kQuantum * (q_scale > 0.0 ? q_scale : 1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  levels_.assign(1, {TreeNode{0.0, keep_q ? 0.0 : nan}});
  children_.clear();
  std::size_t total = 1;

  for (int k = 0; k < steps_; ++k) {
    const auto& cur = levels_.back();
    std::vector<TreeNode> next;
    std::vector<std::int32_t> kids(cur.size() * b);
    std::unordered_map<Key, std::int32_t, KeyHash> index;
    index.reserve(cur.size() * 2 + 16);

    auto key_of = [&](const TreeNode& s) {
      return Key{std::llround(s.x / x_quantum), keep_q ? std::llround(s.q / q_quantum) : 0};
    };
    // Equal-up-to-tolerance states can straddle a rounding boundary; probe the
    // neighbouring cells before creating a node.
    auto find = [&](const Key& key) -> std::int32_t {
      if (auto it = index.find(key); it != index.end()) return it->second;
      const int q_span = keep_q ? 1 : 0;
      for (int dqk = -q_span; dqk <= q_span; ++dqk) {
        for (int dxk = -1; dxk <= 1; ++dxk) {
          if (dqk == 0 && dxk == 0) continue;
          if (auto it = index.find(Key{key.qx + dxk, key.qq + dqk}); it != index.end())
            return it->second;
        }
      }
      return -1;
    };

    for (std::size_t n = 0; n < cur.size(); ++n) {
      for (std::size_t i = 0; i < m; ++i) {
        const double dx = grid_.volatility(i) * sqdt;
        const double q = keep_q ? cur[n].q + grid_.variance(i) * dt_ : nan;
        for (int s = 0; s < 2; ++s) {
          const TreeNode child{s == 0 ? cur[n].x + dx : cur[n].x - dx, q};
          const Key key = key_of(child);
          std::int32_t id = find(key);
          if (id < 0) {
            id = static_cast<std::int32_t>(next.size());
            next.push_back(child);
            index.emplace(key, id);
          }
          kids[n * b + 2 * i + static_cast<std::size_t>(s)] = id;
        }
      }
    }

    total += next.size();
    if (total > options_.node_cap)
      throw CapExceeded("recombined tree exceeds the node cap of " +
                        std::to_string(options_.node_cap) + " at level " + std::to_string(k + 1));

    // Canonical order within a level: ascending (x, q).
    std::vector<std::int32_t> order(next.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t c) {
      const auto& na = next[static_cast<std::size_t>(a)];
      const auto& nc = next[static_cast<std::size_t>(c)];
      if (na.x != nc.x) return na.x < nc.x;
      return keep_q && na.q < nc.q;
    });
    std::vector<std::int32_t> rank(next.size());
    std::vector<TreeNode> sorted(next.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
      rank[static_cast<std::size_t>(order[r])] = static_cast<std::int32_t>(r);
      sorted[r] = next[static_cast<std::size_t>(order[r])];
    }
    for (auto& c : kids) c = rank[static_cast<std::size_t>(c)];

    children_.push_back(std::move(kids));
    levels_.push_back(std::move(sorted));
  }
}

std::size_t ScenarioTree::node_count() const {
  std::size_t total = 0;
  for (const auto& l : levels_) total += l.size();
  return total;
}

int ScenarioTree::level_of_time(double t) const {
  const double r = t / dt_;
  const double k = std::round(r);
  if (!std::isfinite(r) || std::abs(r - k) > 1e-9 || k < 0.0 || k > steps_)
    throw PreconditionError("time " + std::to_string(t) + " is not on the tree lattice");
  return static_cast<int>(k);
}

void ScenarioTree::require_path() const {
  if (options_.recombination != Recombination::Path)
    throw PreconditionError("operation needs a non-recombined (path) tree");
}

std::size_t ScenarioTree::ancestor(int k, std::size_t node, int to) const {
  require_path();
  if (to < 0 || to > k) throw PreconditionError("ancestor level out of range");
  const std::size_t b = branching();
  for (int l = k; l > to; --l) node /= b;
  return node;
}

std::pair<std::size_t, Sign> ScenarioTree::last_step(int k, std::size_t node) const {
  require_path();
  if (k < 1) throw PreconditionError("root has no incoming step");
  const std::size_t branch = node % branching();
  return {branch / 2, static_cast<Sign>(branch % 2)};
}

std::vector<double> ScenarioTree::path_positions(int k, std::size_t node) const {
  require_path();
  std::vector<double> xs(static_cast<std::size_t>(k) + 1);
  for (int l = k; l >= 0; --l) {
    xs[static_cast<std::size_t>(l)] = levels_[static_cast<std::size_t>(l)][node].x;
    node /= branching();
  }
  return xs;
}

ScenarioTree build_tree(const GCoefficients& coef, const VolatilityGrid& grid, int steps,
                        double horizon, TreeOptions options) {
  return ScenarioTree(coef, grid, steps, horizon, options);
}

Recombination recombination_for(const Payoff& p) {
  if (p.needs_path()) return Recombination::Path;
  if (p.needs_qv()) return Recombination::State;
  return Recombination::Position;
}

double one_step_expect(std::span<const double> child_values) {
  if (child_values.empty() || child_values.size() % 2 != 0)
    throw PreconditionError("one_step_expect needs (up, down) pairs for every grid index");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < child_values.size(); i += 2) {
    const double v = 0.5 * (child_values[i] + child_values[i + 1]);
    best = best > v ? best : v;
  }
  return best;
}

PathState terminal_state(const ScenarioTree& tree, std::size_t node,
                         std::vector<double>& positions_buffer) {
  const auto& n = tree.level(tree.steps())[node];
  PathState s;
  s.x = n.x;
  if (tree.recombination() != Recombination::Position) s.qv = n.q;
  if (tree.recombination() == Recombination::Path) {
    positions_buffer = tree.path_positions(tree.steps(), node);
    s.positions = positions_buffer;
    s.dt = tree.dt();
  }
  return s;
}

AdaptedField terminal_field(const ScenarioTree& tree, const Payoff& p) {
  if (p.needs_path() && tree.recombination() != Recombination::Path)
    throw PreconditionError("payoff '" + p.description() + "' needs a path tree");
  if (p.needs_qv() && tree.recombination() == Recombination::Position)
    throw PreconditionError("payoff '" + p.description() +
                            "' reads the quadratic variation, which a position-keyed tree drops");
  AdaptedField f{tree.steps(), std::vector<double>(tree.level_size(tree.steps()))};
  std::vector<double> buffer;
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    f.values[n] = p(terminal_state(tree, n, buffer));
  }
  return f;
}

std::vector<AdaptedField> induct(const ScenarioTree& tree, const AdaptedField& from) {
  if (from.level < 0 || from.level > tree.steps() ||
      from.values.size() != tree.level_size(from.level))
    throw PreconditionError("field does not match the tree level");
  const auto& kernels = kernels::active();
  std::vector<AdaptedField> fields(static_cast<std::size_t>(from.level) + 1);
  fields.back() = from;
  for (int k = from.level - 1; k >= 0; --k) {
    auto& out = fields[static_cast<std::size_t>(k)];
    out.level = k;
    out.values.resize(tree.level_size(k));
    kernels.one_step_max(fields[static_cast<std::size_t>(k) + 1].values, tree.children(k),
                         tree.grid().size(), out.values);
  }
  return fields;
}

std::vector<AdaptedField> backward_induct(const ScenarioTree& tree, const Payoff& p) {
  return induct(tree, terminal_field(tree, p));
}

double expect(const ScenarioTree& tree, const Payoff& p) {
  return backward_induct(tree, p).front().values.front();
}

double expect(const GCoefficients& coef, const VolatilityGrid& grid, int steps, double horizon,
              const Payoff& p, std::size_t node_cap) {
  const auto tree = build_tree(coef, grid, steps, horizon, {recombination_for(p), node_cap});
  return expect(tree, p);
}

AdaptedField condition_at(std::span<const AdaptedField> fields, const ScenarioTree& tree,
                          double t) {
  const int k = tree.level_of_time(t);
  if (static_cast<std::size_t>(k) >= fields.size())
    throw PreconditionError("no conditional field at the requested time");
  return fields[static_cast<std::size_t>(k)];
}

AdaptedField lift_to_terminal(const ScenarioTree& tree, const AdaptedField& field) {
  const int n = tree.steps();
  AdaptedField out{n, std::vector<double>(tree.level_size(n))};
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    out.values[j] = field.values[tree.ancestor(n, j, field.level)];
  }
  return out;
}

}  // namespace gexp
