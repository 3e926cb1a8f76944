#pragma once

// Semigroups T_t = exp(tL), resolvents (alpha - L)^{-1}, heat kernels with
// respect to m, the Cheeger spectrum, and Gaussian upper-bound fitting.

#include <optional>
#include <vector>

#include "dlab/common.hpp"
#include "dlab/dirichlet_form.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

enum class SemigroupMethod {
  kDenseExponential,  // scaling and squaring
  kSpectral,          // eigendecomposition; L must be self-adjoint in L^2(m)
};

/// Read-only after construction; concurrent calls are safe.
class SemigroupEvaluator {
 public:
  SemigroupEvaluator(Mat L, Vec m, SemigroupMethod method = SemigroupMethod::kDenseExponential);

  /// True when m_i L_ij = m_j L_ji within `tol` relative to max |L|.
  static bool is_self_adjoint(const Mat& L, const Vec& m, double tol = 1e-12);

  Mat matrix(double t) const;
  Vec evolve(const Vec& f, double t) const;
  /// T_{t_k} F for non-decreasing times. Consecutive gaps that agree to 1e-12
  /// relative share one increment operator, so uniform grids cost a single
  /// exponential.
  std::vector<Mat> evolve_block(const Mat& F, const std::vector<double>& times) const;
  Mat resolvent_matrix(double alpha) const;
  Vec resolvent(const Vec& f, double alpha) const;

  const Mat& generator() const { return L_; }
  const Vec& measure() const { return m_; }
  SemigroupMethod method() const { return method_; }

 private:
  Mat L_;
  Vec m_;
  SemigroupMethod method_;
  // Spectral cache: L = D^{-1/2} Q diag(eig) Q^T D^{1/2}.
  Vec eig_;
  Mat Q_;
  Vec sqrt_m_;
};

Vec evolve(const Mat& L, const Vec& f, double t);
Vec resolvent(const Mat& L, const Vec& f, double alpha);

/// max_g |E_alpha(G_alpha f, g) - (f, g)_m| over basis vectors g, relative
/// to max(1, max_g |(f,g)_m|).
double resolvent_form_residual(const FormAssembly& form, const Vec& f, double alpha);

/// max |G_alpha f - int_0^inf e^{-alpha t} T_t f dt| relative to
/// max(1, ||G_alpha f||_inf), the integral by composite Gauss-Legendre.
double laplace_consistency(const Mat& L, const Vec& f, double alpha);

struct MarkovReport {
  bool positivity = false;
  bool contraction = false;
  double conservative_defect = 0.0;  // ||T_t 1 - 1||_inf
  double min_kernel = 0.0;
  double max_mass = 0.0;  // max_x sum_y p(t,x,y) m(y)
};

/// p(t,x,y) = T_t(x,y) / m(y).
struct HeatKernel {
  double t = 0.0;
  Mat p;
  MarkovReport report;
};

HeatKernel heat_kernel(const Mat& L, const Vec& m, double t);
HeatKernel heat_kernel(const SemigroupEvaluator& semigroup, double t);

/// Eigenpairs of -Delta for the Laplacian of the Cheeger energy, ascending,
/// m-orthonormal; each eigenvector's largest-magnitude entry is positive.
struct Spectrum {
  Vec values;
  Mat vectors;  // columns
};

Spectrum cheeger_spectrum(const DiscreteSpace& space, Index k_max);

struct GaussianFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double nu = 0.0;
  bool holds = false;
  /// max over samples of p / bound; <= 1 when the bound dominates.
  double worst_ratio = 0.0;
  Index samples_used = 0;
  Index samples_below_floor = 0;
  /// Largest c with m(B_r(x)) >= c r^{2 nu} over all centers and radii.
  double bishop_gromov_c = 0.0;
};

struct GaussianFitOptions {
  double nu_min = 0.0;
  double nu_max = 4.0;
  /// Kernel entries with p m(y) below this are excluded (below the dense
  /// exponential's absolute accuracy).
  double entry_floor = 1e-10;
  std::optional<double> C1_override;
};

/// Upper envelope p(t,x,y) <= C1 t^{-nu} exp(-C2 d(x,y)^2 / t) fitted by
/// least squares of log p against (log t, d^2/t), C1 then inflated to cover
/// the largest residual.
GaussianFit gaussian_bound_fit(const std::vector<HeatKernel>& kernels, const DiscreteSpace& space,
                               const Mat& metric, const GaussianFitOptions& options = {});

}  // namespace dlab
