#pragma once

// Data-parallel inner loops of the lattice and PDE engines.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, a vectorized variant. The variants evaluate the same
// arithmetic in the same order (no FMA contraction), so their results are
// bit-identical to the reference; tests/test_kernels.cpp holds them to that.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace gexp::kernels {

enum class Backend { Scalar, Avx2 };

/// One backward-induction step over a block of nodes.
///
/// For node n and grid index i the two children are
/// child_values[child_index[n*2m + 2i]] (up) and [.. + 2i + 1] (down);
/// out[n] = max_i 0.5 * (up + down), reduced in ascending i.
using OneStepMaxFn = void (*)(std::span<const double> child_values,
                              std::span<const std::int32_t> child_index, std::size_t m,
                              std::span<double> out);

/// Interior explicit G-heat update for j in [1, n-2]:
///   a = (u[j-1] - 2 u[j] + u[j+1]) * inv_dx2
///   out[j] = u[j] + dt * (0.5 * (high * a^+ - low * a^-))
/// out[0] and out[n-1] are left untouched.
using HeatStepFn = void (*)(std::span<const double> u, std::span<double> out, double inv_dx2,
                            double dt, double sigma_low_sq, double sigma_high_sq);

struct KernelTable {
  Backend backend;
  OneStepMaxFn one_step_max;
  HeatStepFn heat_step;
};

/// Scalar reference table; always available.
const KernelTable& scalar_table();

/// True when the running CPU and the build both support `b`.
bool backend_available(Backend b);

/// Table for `b`; falls back to scalar when unavailable.
const KernelTable& table_for(Backend b);

/// The table the engines use. Chosen once from the CPU features (best
/// available), overridable with GEXP_KERNELS=scalar|avx2 or force_backend().
const KernelTable& active();

/// Process-wide override, mainly for equivalence tests. Throws
/// PreconditionError when `b` is not available.
void force_backend(Backend b);

std::string_view backend_name(Backend b);

namespace detail {
void one_step_max_scalar(std::span<const double>, std::span<const std::int32_t>, std::size_t,
                         std::span<double>);
void heat_step_scalar(std::span<const double>, std::span<double>, double, double, double, double);
#if defined(GEXP_HAVE_AVX2)
void one_step_max_avx2(std::span<const double>, std::span<const std::int32_t>, std::size_t,
                       std::span<double>);
void heat_step_avx2(std::span<const double>, std::span<double>, double, double, double, double);
#endif
}  // namespace detail

}  // namespace gexp::kernels
