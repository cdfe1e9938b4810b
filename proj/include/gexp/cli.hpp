#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gexp/extension.hpp"
#include "gexp/measures.hpp"
#include "json.hpp"

namespace gexp::cli {

enum ExitCode : int {
  kOk = 0,
  kPrecondition = 2,
  kVerification = 3,
  kUsage = 64,
};

/// Everything a run needs besides the command line. Loaded from a JSON
/// document; every section is optional and unknown keys are rejected.
struct RunConfig {
  double sigma_low_sq = 0.25;
  double sigma_high_sq = 1.0;

  /// Grid: exactly one of m, volatilities, variances is used (m by default).
  std::size_t grid_m = 2;
  std::vector<double> grid_volatilities;
  std::vector<double> grid_variances;

  int steps = 8;
  double horizon = 1.0;
  std::size_t node_cap = 2'000'000;

  /// PDE grid; 0 means derived: half-width ceil(8 sigma_high sqrt(T)),
  /// CFL-tight dt.
  double x_min = 0.0;
  double x_max = 0.0;
  double dx = 0.02;
  double dt = 0.0;

  double tree_tolerance = 1e-9;
  double pde_tolerance = 1e-3;
  std::size_t max_k = std::size_t{1} << 14;

  /// convergence sweep: tree step counts and PDE spacings. With
  /// sigma_high_sq = 1 and T = 1 these spacings give even CFL-tight step
  /// counts; odd and even counts land on opposite sides of the limit.
  std::vector<int> sweep_steps{16, 32, 64, 128, 256};
  std::vector<double> sweep_dx{0.1, 0.05, 0.025};

  std::uint64_t seed = 0;

  static RunConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  GCoefficients coefficients() const;
  VolatilityGrid grid() const;
  Grid1D pde_grid() const;
  Grid1D pde_grid(double dx) const;
  StopRule tree_stop() const { return {tree_tolerance, max_k}; }
  StopRule pde_stop() const { return {pde_tolerance, max_k}; }
};

/// Payoff spec: call:K, put:K, square, identity, abs, digital_ge:a,
/// qv_band:lo,hi, qv_identity, square_clamped:c, const:c, neg:<spec>.
Payoff parse_payoff(std::string_view spec);

/// Terminal event spec on a path tree: all, none, x_ge:a, x_gt:a,
/// x_in:<closed set>, x_in_open:<open set>, qv_in:<closed set>,
/// qv_in_open:<open set>.
TreeEvent parse_event(const ScenarioTree& tree, std::string_view spec);

/// Scheme spec: [qv:]envdown:closed:<set> (Down) or [qv:]envup:open:<set> (Up).
MonotoneScheme parse_scheme(std::string_view spec);

/// Runs one command. args excludes the program name. Result documents go to
/// --out (or `out` when absent); diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gexp::cli
