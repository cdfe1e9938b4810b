// Built with -mavx2 (and without -mfma): the CPU check in dispatch.cpp must
// pass before anything here runs.

#include <immintrin.h>

#include <limits>

#include "gexp/kernels.hpp"

namespace gexp::kernels::detail {

void one_step_max_avx2(std::span<const double> child_values,
                       std::span<const std::int32_t> child_index, std::size_t m,
                       std::span<double> out) {
  const std::size_t stride = 2 * m;
  const std::size_t count = out.size();
  const double* values = child_values.data();
  const std::int32_t* index = child_index.data();
  const __m256d half = _mm256_set1_pd(0.5);
  const int s = static_cast<int>(stride);
  const __m128i lane_offsets = _mm_setr_epi32(0, s, 2 * s, 3 * s);

  std::size_t n = 0;
  for (; n + 4 <= count; n += 4) {
    const std::int32_t* base = index + n * stride;
    __m256d best = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < m; ++i) {
      const __m128i up_idx = _mm_i32gather_epi32(reinterpret_cast<const int*>(base + 2 * i),
                                                 lane_offsets, 4);
      const __m128i dn_idx = _mm_i32gather_epi32(reinterpret_cast<const int*>(base + 2 * i + 1),
                                                 lane_offsets, 4);
      const __m256d up = _mm256_i32gather_pd(values, up_idx, 8);
      const __m256d dn = _mm256_i32gather_pd(values, dn_idx, 8);
      const __m256d v = _mm256_mul_pd(half, _mm256_add_pd(up, dn));
      best = _mm256_max_pd(best, v);
    }
    _mm256_storeu_pd(out.data() + n, best);
  }
  if (n < count) {
    one_step_max_scalar(child_values, child_index.subspan(n * stride), m, out.subspan(n));
  }
}

void heat_step_avx2(std::span<const double> u, std::span<double> out, double inv_dx2, double dt,
                    double sigma_low_sq, double sigma_high_sq) {
  const std::size_t n = u.size();
  if (n < 3) return;
  const double* src = u.data();
  double* dst = out.data();
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d vinv = _mm256_set1_pd(inv_dx2);
  const __m256d vdt = _mm256_set1_pd(dt);
  const __m256d vlo = _mm256_set1_pd(sigma_low_sq);
  const __m256d vhi = _mm256_set1_pd(sigma_high_sq);

  std::size_t j = 1;
  for (; j + 4 < n; j += 4) {
    const __m256d left = _mm256_loadu_pd(src + j - 1);
    const __m256d mid = _mm256_loadu_pd(src + j);
    const __m256d right = _mm256_loadu_pd(src + j + 1);
    const __m256d d2 = _mm256_add_pd(_mm256_sub_pd(left, _mm256_mul_pd(two, mid)), right);
    const __m256d a = _mm256_mul_pd(d2, vinv);
    const __m256d pos = _mm256_max_pd(a, zero);
    const __m256d neg = _mm256_max_pd(_mm256_xor_pd(a, sign), zero);
    const __m256d g = _mm256_mul_pd(half, _mm256_sub_pd(_mm256_mul_pd(vhi, pos),
                                                        _mm256_mul_pd(vlo, neg)));
    _mm256_storeu_pd(dst + j, _mm256_add_pd(mid, _mm256_mul_pd(vdt, g)));
  }
  if (j + 1 < n) {
    // Scalar tail over [j, n-2]; the reference skips index 0 of its input.
    heat_step_scalar(u.subspan(j - 1), out.subspan(j - 1), inv_dx2, dt, sigma_low_sq,
                     sigma_high_sq);
  }
}

}  // namespace gexp::kernels::detail
