#include "gexp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gexp {
namespace {

bool close_rel(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

void check_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0)
      throw PreconditionError(std::string(what) + " must be finite and nonnegative");
    if (i > 0 && !(v[i - 1] < v[i]))
      throw PreconditionError(std::string(what) + " must be strictly increasing");
  }
}

}  // namespace

GCoefficients::GCoefficients(double sigma_low_sq, double sigma_high_sq)
    : low_(sigma_low_sq), high_(sigma_high_sq) {
  if (!(std::isfinite(low_) && std::isfinite(high_)) || low_ < 0.0 || low_ > high_)
    throw PreconditionError("coefficients must satisfy 0 <= sigma_low_sq <= sigma_high_sq < inf");
}

double g_eval(const GCoefficients& coef, double a) {
  const double pos = a > 0.0 ? a : 0.0;
  const double neg = a < 0.0 ? -a : 0.0;
  return 0.5 * (coef.sigma_high_sq() * pos - coef.sigma_low_sq() * neg);
}

VolatilityGrid VolatilityGrid::uniform(const GCoefficients& coef, std::size_t m) {
  if (m == 0) throw PreconditionError("volatility grid needs at least one value");
  if (m == 1 && !coef.is_classical())
    throw PreconditionError("a single-point grid requires sigma_low_sq == sigma_high_sq");
  if (coef.is_classical() && m != 1)
    throw PreconditionError("a classical interval admits only a single-point grid");
  const double lo = std::sqrt(coef.sigma_low_sq());
  const double hi = std::sqrt(coef.sigma_high_sq());
  std::vector<double> vols(m), vars(m);
  for (std::size_t i = 0; i < m; ++i) {
    vols[i] = m == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
    vars[i] = vols[i] * vols[i];
  }
  vols.back() = hi;
  vars.front() = coef.sigma_low_sq();
  vars.back() = coef.sigma_high_sq();
  return VolatilityGrid(std::move(vols), std::move(vars));
}

VolatilityGrid VolatilityGrid::from_volatilities(const GCoefficients& coef,
                                                 std::vector<double> values) {
  if (values.empty()) throw PreconditionError("volatility grid needs at least one value");
  check_increasing(values, "volatility grid");
  if (!close_rel(values.front(), std::sqrt(coef.sigma_low_sq())) ||
      !close_rel(values.back(), std::sqrt(coef.sigma_high_sq())))
    throw PreconditionError("volatility grid must span [sqrt(sigma_low_sq), sqrt(sigma_high_sq)]");
  std::vector<double> vars(values.size());
  std::transform(values.begin(), values.end(), vars.begin(), [](double s) { return s * s; });
  values.front() = std::sqrt(coef.sigma_low_sq());
  values.back() = std::sqrt(coef.sigma_high_sq());
  vars.front() = coef.sigma_low_sq();
  vars.back() = coef.sigma_high_sq();
  return VolatilityGrid(std::move(values), std::move(vars));
}

VolatilityGrid VolatilityGrid::from_variances(const GCoefficients& coef,
                                              std::vector<double> variances) {
  if (variances.empty()) throw PreconditionError("volatility grid needs at least one value");
  check_increasing(variances, "variance grid");
  if (!close_rel(variances.front(), coef.sigma_low_sq()) ||
      !close_rel(variances.back(), coef.sigma_high_sq()))
    throw PreconditionError("variance grid must span [sigma_low_sq, sigma_high_sq]");
  variances.front() = coef.sigma_low_sq();
  variances.back() = coef.sigma_high_sq();
  std::vector<double> vols(variances.size());
  std::transform(variances.begin(), variances.end(), vols.begin(),
                 [](double v) { return std::sqrt(v); });
  return VolatilityGrid(std::move(vols), std::move(variances));
}

}  // namespace gexp
