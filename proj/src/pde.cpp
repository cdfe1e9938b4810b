#include "gexp/pde.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gexp/kernels.hpp"

namespace gexp {
namespace {

constexpr double kDomainWidths = 8.0;

void check_cfl(const GCoefficients& coef, double dx, double dt) {
  if (dt * coef.sigma_high_sq() / (dx * dx) > 1.0 + 1e-12)
    throw PreconditionError("CFL violated: dt * sigma_high_sq / dx^2 = " +
                            std::to_string(dt * coef.sigma_high_sq() / (dx * dx)) + " > 1");
}

void check_domain(const GCoefficients& coef, const Grid1D& grid, double t) {
  const double need = kDomainWidths * std::sqrt(coef.sigma_high_sq() * t);
  const double have = std::min(-grid.x_min(), grid.x_max());
  if (have < need * (1.0 - 1e-12))
    throw PreconditionError("domain half-width " + std::to_string(have) +
                            " is below 8 sigma_high sqrt(t) = " + std::to_string(need));
}

std::size_t window_points(const GCoefficients& coef, double dx, double span) {
  const double half = kDomainWidths * std::sqrt(coef.sigma_high_sq() * span);
  return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(half / dx - 1e-9)));
}

struct CylinderSolver {
  const GCoefficients& coef;
  const Payoff& payoff;
  std::span<const double> times;
  double dx;
  double dt;
  std::vector<double> coords;

  // coords[0..j) fixed; the last fixed coordinate (or 0) sits on the dx lattice
  // at integer offset `base`.
  double value(std::size_t j, long base) {
    if (j == times.size()) return payoff.eval_cylinder(coords);
    const double start = j == 0 ? 0.0 : times[j - 1];
    const double span = times[j] - start;
    if (span <= 0.0) {
      coords[j] = static_cast<double>(base) * dx;
      return value(j + 1, base);
    }
    const auto half = static_cast<long>(window_points(coef, dx, span));
    std::vector<double> initial(static_cast<std::size_t>(2 * half + 1));
    for (long l = -half; l <= half; ++l) {
      coords[j] = static_cast<double>(base + l) * dx;
      initial[static_cast<std::size_t>(l + half)] = value(j + 1, base + l);
    }
    const auto u = evolve_g_heat(coef, initial, dx, dt, span);
    return u[static_cast<std::size_t>(half)];
  }
};

}  // namespace

Grid1D::Grid1D(double x_min, double x_max, double dx, double dt)
    : x_min_(x_min), x_max_(x_max), dx_(dx), dt_(dt), intervals_(0) {
  if (!(x_min_ < 0.0 && 0.0 < x_max_) || !std::isfinite(x_min_) || !std::isfinite(x_max_))
    throw PreconditionError("grid must satisfy x_min < 0 < x_max");
  if (!(dx_ > 0.0) || !(dt_ > 0.0)) throw PreconditionError("grid needs dx > 0 and dt > 0");
  const double r = (x_max_ - x_min_) / dx_;
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r) || n < 8.0)
    throw PreconditionError("(x_max - x_min) / dx must be an integer >= 8");
  intervals_ = static_cast<std::size_t>(n);
}

Grid1D Grid1D::cfl_tight(const GCoefficients& coef, double half_width, double dx) {
  const double dt = coef.sigma_high_sq() > 0.0 ? dx * dx / coef.sigma_high_sq() : 1.0;
  return Grid1D(-half_width, half_width, dx, dt);
}

bool Grid1D::satisfies_cfl(const GCoefficients& coef) const {
  return dt_ * coef.sigma_high_sq() / (dx_ * dx_) <= 1.0 + 1e-12;
}

double Field1D::value_at(double x) const {
  if (x < grid.x_min() || x > grid.x_max()) throw PreconditionError("point outside the grid");
  const double r = (x - grid.x_min()) / grid.dx();
  const double j = std::round(r);
  if (std::abs(r - j) <= 1e-9) return values[static_cast<std::size_t>(j)];
  const auto lo = std::min(static_cast<std::size_t>(std::floor(r)), values.size() - 2);
  const double w = r - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[lo + 1];
}

std::vector<double> evolve_g_heat(const GCoefficients& coef, std::span<const double> initial,
                                  double dx, double dt_max, double t) {
  if (initial.size() < 3) throw PreconditionError("G-heat solve needs at least 3 points");
  if (t < 0.0) throw PreconditionError("negative time");
  check_cfl(coef, dx, dt_max);
  std::vector<double> u(initial.begin(), initial.end());
  if (t == 0.0) return u;
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(t / dt_max - 1e-9)));
  const double h = t / static_cast<double>(steps);
  const double inv_dx2 = 1.0 / (dx * dx);
  std::vector<double> next(u.size());
  const auto& kernels = kernels::active();
  for (std::size_t s = 0; s < steps; ++s) {
    kernels.heat_step(u, next, inv_dx2, h, coef.sigma_low_sq(), coef.sigma_high_sq());
    // Gradient-copy ghosts make the end-point second difference zero.
    next.front() = u.front();
    next.back() = u.back();
    u.swap(next);
  }
  return u;
}

Field1D solve_g_heat(const GCoefficients& coef, const Payoff& phi, double t, const Grid1D& grid) {
  if (phi.needs_qv() || phi.needs_path())
    throw PreconditionError("G-heat solve needs a terminal-state payoff, got '" +
                            phi.description() + "'");
  check_cfl(coef, grid.dx(), grid.dt());
  check_domain(coef, grid, t);
  std::vector<double> initial(grid.points());
  for (std::size_t j = 0; j < initial.size(); ++j) initial[j] = phi.at(grid.x(j));
  return Field1D{grid, t, evolve_g_heat(coef, initial, grid.dx(), grid.dt(), t)};
}

double expect_gnormal(const GCoefficients& coef, const Payoff& phi, double t, const Grid1D& grid) {
  return solve_g_heat(coef, phi, t, grid).value_at(0.0);
}

double expect_cylinder(const GCoefficients& coef, const Payoff& p, const Grid1D& grid) {
  if (p.kind() != PayoffKind::Cylinder) throw PreconditionError("expect_cylinder needs a cylinder payoff");
  const auto times = p.cylinder_times();
  if (times.size() > 3) throw CapExceeded("cylinder payoffs are limited to 3 time points");
  check_cfl(coef, grid.dx(), grid.dt());
  check_domain(coef, grid, times.back());
  CylinderSolver solver{coef, p, times, grid.dx(), grid.dt(), std::vector<double>(times.size())};
  return solver.value(0, 0);
}

}  // namespace gexp
