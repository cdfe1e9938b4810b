#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gexp/core.hpp"
#include "gexp/payoff.hpp"

namespace gexp {

/// Uniform 1-D grid with Neumann (gradient-copy) ends.
class Grid1D {
 public:
  /// Throws PreconditionError unless x_min < 0 < x_max, dx > 0, dt > 0 and
  /// (x_max - x_min) / dx is an integer >= 8.
  Grid1D(double x_min, double x_max, double dx, double dt);

  /// [-half_width, half_width] with the CFL-tight step dt = dx^2 / sigma_high_sq.
  static Grid1D cfl_tight(const GCoefficients& coef, double half_width, double dx);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }
  std::size_t points() const { return intervals_ + 1; }
  double x(std::size_t j) const { return x_min_ + static_cast<double>(j) * dx_; }

  /// dt sigma_high_sq / dx^2 <= 1.
  bool satisfies_cfl(const GCoefficients& coef) const;

 private:
  double x_min_;
  double x_max_;
  double dx_;
  double dt_;
  std::size_t intervals_;
};

struct Field1D {
  Grid1D grid;
  double time;
  std::vector<double> values;

  /// Linear interpolation between neighbouring grid points.
  double value_at(double x) const;
};

/// Explicit monotone scheme for d_t u = G(d_xx u), u(0, .) = initial, on a
/// grid with spacing dx; the step is t / ceil(t / dt_max). Returns u(t, .).
std::vector<double> evolve_g_heat(const GCoefficients& coef, std::span<const double> initial,
                                  double dx, double dt_max, double t);

/// u(t, .) for u(0, x) = phi(x). Throws on CFL violation or when the domain
/// half-width is below 8 sigma_high sqrt(t).
Field1D solve_g_heat(const GCoefficients& coef, const Payoff& phi, double t, const Grid1D& grid);

/// Ê[phi(sqrt(t) X)] for G-normal X, read off as u(t, 0).
double expect_gnormal(const GCoefficients& coef, const Payoff& phi, double t, const Grid1D& grid);

/// Ê[phi(B_{t_1}, ..., B_{t_k})] for a cylinder payoff with k <= 3, by
/// integrating out the last coordinate with a G-heat solve for every lattice
/// value of the earlier ones, then recursing outward. Uses grid.dx() and
/// grid.dt(); the grid must satisfy the CFL and domain rules for t_k.
double expect_cylinder(const GCoefficients& coef, const Payoff& p, const Grid1D& grid);

}  // namespace gexp
