#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gexp/error.hpp"

namespace gexp {

/// What a payoff sees at the end of a path. Engines fill in what they have:
/// the PDE engine only knows a position, recombined trees add the quadratic
/// variation, and the path tree adds the whole position history.
struct PathState {
  double x = 0.0;
  std::optional<double> qv;
  /// Positions at lattice times 0, dt, ..., terminal; empty if unavailable.
  std::span<const double> positions;
  /// Lattice spacing of `positions`.
  double dt = 0.0;
};

enum class PayoffKind { TerminalState, QuadVar, Cylinder, PathFunctional };

/// A random variable on the canonical path space, described by a closed set
/// of families plus pointwise combinators.
///
/// Payoffs are immutable and cheap to copy (the evaluator is shared).
class Payoff {
 public:
  using StateFn = std::function<double(double)>;
  using CylinderFn = std::function<double(std::span<const double>)>;
  using PathFn = std::function<double(const PathState&)>;

  // -- families --------------------------------------------------------------
  static Payoff constant(double c);
  static Payoff call(double strike);
  static Payoff put(double strike);
  static Payoff square();
  static Payoff identity();
  static Payoff abs();
  /// min(x^2, cap).
  static Payoff square_clamped(double cap);
  /// Indicator of x >= level. Not Lipschitz.
  static Payoff digital_ge(double level);
  /// Indicator of lo < q < hi on the terminal quadratic variation.
  static Payoff qv_band(double lo, double hi);
  static Payoff qv_identity();

  // -- generic constructors --------------------------------------------------
  static Payoff terminal(StateFn f, std::optional<double> lipschitz,
                         std::string description);
  static Payoff quad_var(StateFn g, std::optional<double> lipschitz,
                         std::string description);
  /// f(x, q) on the terminal state.
  static Payoff state(std::function<double(double, double)> f,
                      std::optional<double> lipschitz, std::string description);
  /// phi(B_{t_1}, ..., B_{t_k}); times strictly increasing in [0, inf), k <= 3.
  static Payoff cylinder(std::vector<double> times, CylinderFn phi,
                         std::optional<double> lipschitz,
                         std::string description);
  static Payoff path(PathFn h, std::optional<double> lipschitz,
                     std::string description);

  // -- evaluation ------------------------------------------------------------
  /// Throws PreconditionError when `state` lacks a component this payoff needs.
  double operator()(const PathState& state) const;
  double at(double x) const { return (*this)(PathState{x, std::nullopt, {}, 0.0}); }

  PayoffKind kind() const { return kind_; }
  bool needs_qv() const { return needs_qv_; }
  bool needs_path() const { return needs_path_; }
  bool reads_position() const { return reads_x_; }
  std::optional<double> lipschitz_bound() const { return lipschitz_; }
  const std::string& description() const { return description_; }

  /// Only meaningful for PayoffKind::Cylinder.
  std::span<const double> cylinder_times() const { return times_; }
  double eval_cylinder(std::span<const double> coords) const;

  // -- combinators -----------------------------------------------------------
  friend Payoff operator+(const Payoff& a, const Payoff& b);
  friend Payoff operator-(const Payoff& a, const Payoff& b);
  friend Payoff operator-(const Payoff& a);
  friend Payoff operator*(double s, const Payoff& a);
  friend Payoff operator*(const Payoff& a, const Payoff& b);
  friend Payoff operator+(const Payoff& a, double c);
  friend Payoff pmax(const Payoff& a, const Payoff& b);
  friend Payoff pmin(const Payoff& a, const Payoff& b);
  friend Payoff pabs(const Payoff& a);
  friend Payoff positive_part(const Payoff& a);

 private:
  Payoff() = default;
  static Payoff combine(const Payoff& a, const Payoff& b,
                        std::function<double(double, double)> op,
                        std::optional<double> lipschitz, std::string description);
  static Payoff map(const Payoff& a, std::function<double(double)> op,
                    std::optional<double> lipschitz, std::string description);

  PayoffKind kind_ = PayoffKind::TerminalState;
  bool reads_x_ = false;
  bool needs_qv_ = false;
  bool needs_path_ = false;
  std::optional<double> lipschitz_;
  std::string description_;
  std::vector<double> times_;
  std::shared_ptr<const PathFn> eval_;
  std::shared_ptr<const CylinderFn> cyl_;
};

Payoff operator+(const Payoff& a, const Payoff& b);
Payoff operator-(const Payoff& a, const Payoff& b);
Payoff operator-(const Payoff& a);
Payoff operator*(double s, const Payoff& a);
Payoff operator*(const Payoff& a, const Payoff& b);
Payoff operator+(const Payoff& a, double c);
Payoff pmax(const Payoff& a, const Payoff& b);
Payoff pmin(const Payoff& a, const Payoff& b);
Payoff pabs(const Payoff& a);
Payoff positive_part(const Payoff& a);

/// Evaluates `p` on `state`; free-function spelling of Payoff::operator().
inline double payoff_eval(const Payoff& p, const PathState& state) { return p(state); }

}  // namespace gexp
