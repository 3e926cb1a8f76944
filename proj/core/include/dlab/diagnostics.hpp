#pragma once

// Conservativeness criterion via ball volumes and Erfc decay, and volume
// growth checks.

#include <array>
#include <optional>
#include <vector>

#include "dlab/calculus.hpp"
#include "dlab/common.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

/// Erfc(x) = 2/sqrt(pi) int_x^inf exp(-y^2) dy.
double erfc(double x);

struct CriterionRow {
  double r = 0.0;
  double ball_measure = 0.0;  // m(B^rho_{R+r})
  double max_energy = 0.0;    // M^rho(R+r) = max over the ball of Gamma_a(rho,rho)
  double argument = 0.0;      // r / sqrt(M T)
  double product = 0.0;       // m(B) Erfc(argument)
};

struct ConservativenessReport {
  std::array<bool, 2> div_matches{};  // div b_i == c within 1e-12
  std::array<double, 2> div_mismatch{};
  /// The criterion only applies when both divergences match c.
  bool applicable = false;
  std::vector<CriterionRow> criterion_table;
  bool criterion_decreasing = false;  // over the last half of the r grid
  bool drift_bound_ok = false;
  double drift_bound_constant = 0.0;  // smallest c with |b1-b2||grad rho| <= c(1+r) on B_r
  std::vector<std::pair<double, double>> exact_defect;  // (t, ||T_t 1 - 1||_inf)
};

struct ConservativenessOptions {
  double T = 1.0;
  double R = 0.0;
  std::vector<double> r_grid;
  std::optional<VertexField> rho;  // defaults to d(., basepoint)
  std::vector<double> exact_times;  // defaults to {T}
};

ConservativenessReport conservativeness_criterion(const DiscreteSpace& space,
                                                  const CoefficientSet& coeffs,
                                                  const ConservativenessOptions& options);

/// m(B_r(basepoint)) <= c1 exp(c2 r^2) for every r > 0, checked exactly at the
/// finitely many radii where the ball changes.
bool volume_growth_check(const DiscreteSpace& space, double c1, double c2);

/// Largest c with m(B_r(x)) >= c r^{2 nu} for all centers x and 0 < r <= diam.
double bishop_gromov_constant(const DiscreteSpace& space, const Mat& metric, double nu);
double bishop_gromov_constant(const DiscreteSpace& space, double nu);

}  // namespace dlab
