#include "gexp/kernels.hpp"

#include <limits>

namespace gexp::kernels::detail {

void one_step_max_scalar(std::span<const double> child_values,
                         std::span<const std::int32_t> child_index, std::size_t m,
                         std::span<double> out) {
  const std::size_t stride = 2 * m;
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::int32_t* idx = child_index.data() + n * stride;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double v = 0.5 * (child_values[idx[2 * i]] + child_values[idx[2 * i + 1]]);
      // Same selection rule as _mm256_max_pd(best, v).
      best = best > v ? best : v;
    }
    out[n] = best;
  }
}

void heat_step_scalar(std::span<const double> u, std::span<double> out, double inv_dx2, double dt,
                      double sigma_low_sq, double sigma_high_sq) {
  const std::size_t n = u.size();
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double a = (u[j - 1] - 2.0 * u[j] + u[j + 1]) * inv_dx2;
    const double pos = a > 0.0 ? a : 0.0;
    const double neg = 0.0 > a ? -a : 0.0;
    out[j] = u[j] + dt * (0.5 * (sigma_high_sq * pos - sigma_low_sq * neg));
  }
}

}  // namespace gexp::kernels::detail
