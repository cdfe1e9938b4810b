#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gexp/error.hpp"

namespace gexp {

/// The volatility-uncertainty interval [sigma_low_sq, sigma_high_sq] that
/// defines the one-dimensional generator G.
class GCoefficients {
 public:
  /// Throws PreconditionError unless 0 <= low <= high < inf.
  GCoefficients(double sigma_low_sq, double sigma_high_sq);

  double sigma_low_sq() const { return low_; }
  double sigma_high_sq() const { return high_; }

  /// True when the interval collapses to a point (classical Brownian case).
  bool is_classical() const { return low_ == high_; }

  friend bool operator==(const GCoefficients&, const GCoefficients&) = default;

 private:
  double low_;
  double high_;
};

/// G(a) = 1/2 (sigma_high_sq a^+ - sigma_low_sq a^-).
double g_eval(const GCoefficients& coef, double a);

/// Finite, strictly increasing set of volatilities sigma_1 < ... < sigma_m
/// spanning [sqrt(sigma_low_sq), sqrt(sigma_high_sq)].
///
/// Variances are stored alongside the volatilities; the end points carry the
/// coefficients' variances verbatim so that accumulated quadratic variation
/// hits the interval ends without a sqrt round trip.
class VolatilityGrid {
 public:
  /// m equally spaced volatilities between the interval ends (m = 1 requires
  /// a classical interval).
  static VolatilityGrid uniform(const GCoefficients& coef, std::size_t m);

  /// From explicit volatilities. The first and last value must match the
  /// interval ends to 1e-12 relative.
  static VolatilityGrid from_volatilities(const GCoefficients& coef,
                                          std::vector<double> values);

  /// From explicit variances sigma_i^2.
  static VolatilityGrid from_variances(const GCoefficients& coef,
                                       std::vector<double> variances);

  std::size_t size() const { return vols_.size(); }
  double volatility(std::size_t i) const { return vols_[i]; }
  double variance(std::size_t i) const { return vars_[i]; }
  std::span<const double> volatilities() const { return vols_; }
  std::span<const double> variances() const { return vars_; }

 private:
  VolatilityGrid(std::vector<double> vols, std::vector<double> vars)
      : vols_(std::move(vols)), vars_(std::move(vars)) {}

  std::vector<double> vols_;
  std::vector<double> vars_;
};

/// Node-indexed values on one level of a scenario tree.
struct AdaptedField {
  int level = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t node) const { return values[node]; }
};

}  // namespace gexp
