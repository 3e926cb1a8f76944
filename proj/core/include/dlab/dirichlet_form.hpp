#pragma once

// Assembly of the non-symmetric form
//   E(f,g) = 1/2 int <A grad f, grad g> dm + int b1(f) g dm + int f b2(g) dm + int f g c dm
// on a DiscreteSpace, the checks that make it a Dirichlet form, and the
// generator pair (L, L_hat) with E(f,g) = (-Lf, g)_m = (f, -L_hat g)_m.

#include <cstdint>
#include <optional>
#include <vector>

#include "dlab/calculus.hpp"
#include "dlab/common.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

struct Bounds {
  double a_sup = 0.0;
  double b1_sup = 0.0;      // sup |b1|
  double b2_sup = 0.0;      // sup |b2|
  double div_b1_sup = 0.0;  // sup |div b1|
  double div_b2_sup = 0.0;  // sup |div b2|
  double c_sup = 0.0;
  double b_diff_sup = 0.0;  // sup |b1 - b2|
};

struct AssumptionReport {
  bool elliptic = false;
  bool positivity_1 = false;  // c >= div b1 pointwise
  bool positivity_2 = false;  // c >= div b2 pointwise
  bool symmetric_a = false;
  std::optional<Index> violating_vertex_1;
  std::optional<Index> violating_vertex_2;
  double min_a = 0.0;
  Bounds bounds;

  bool ok() const { return elliptic && positivity_1 && positivity_2 && symmetric_a; }
};

AssumptionReport check_assumptions(const DiscreteSpace& space, const CoefficientSet& coeffs);

/// Dense bilinear table with E(f,g) = f^T B g.
struct FormAssembly {
  DiscreteSpace space;
  CoefficientSet coeffs;
  Mat B;
  Mat B_sym;
  Mat B_anti;
  double lambda = 0.0;
  AssumptionReport assumptions;
  /// False when the coefficients failed check_assumptions; the assembly is
  /// still produced so that violations can be inspected.
  bool validated = false;

  double energy(const VertexField& f, const VertexField& g) const { return f.dot(B * g); }
  double energy(const VertexField& f) const { return f.dot(B_sym * f); }
};

FormAssembly assemble(const DiscreteSpace& space, const CoefficientSet& coeffs);

struct SectorConstant {
  double analytic = 0.0;
  /// Exact sup over all nonzero pairs of |E_1(f,g)| / (E_1(f)^{1/2} E_1(g)^{1/2}).
  double measured = 0.0;
  /// Max of the same ratio over the random pairs drawn with `seed`.
  double sampled = 0.0;
};

SectorConstant sector_constant(const FormAssembly& form, Index samples = 256,
                               std::uint64_t seed = 7);

struct MarkovStructure {
  double min_offdiag_L = 0.0;
  double min_offdiag_L_hat = 0.0;
  bool nonnegative = false;
};

struct GeneratorPair {
  Mat L;
  Mat L_hat;
  Vec m;
  MarkovStructure markov;
};

GeneratorPair generators(const FormAssembly& form);
MarkovStructure markov_structure(const Mat& L, const Mat& L_hat);

struct GeneratorDifference {
  /// Residual of (L_hat - L) f = 2 b1(f) - 2 b2(f) + f (div b1 - div b2).
  double max_residual = 0.0;
  /// Residual of the variant with the divergence terms' signs flipped:
  /// 2 b1(f) - 2 b2(f) - f div b1 + f div b2.
  double flipped_sign_residual = 0.0;
  double scale = 0.0;  // max-row-sum norm of L
};

GeneratorDifference generator_difference_check(const FormAssembly& form,
                                               const GeneratorPair& gen);

struct UpwindResult {
  GeneratorPair generators;
  EdgeField a_effective;
  /// max_e (a_eff - a): bound on |E'(f) - E(f)| / Ch(f).
  double modification_norm = 0.0;
  /// max-row-sum norm of L' - L.
  double operator_change = 0.0;
};

/// Raises the diffusion multiplier to |theta1 - theta2| on edges where the
/// centered drift would produce negative off-diagonal rates.
UpwindResult markovize_upwind(const DiscreteSpace& space, const CoefficientSet& coeffs);

}  // namespace dlab
