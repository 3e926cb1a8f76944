#include <limits>
#include "dlab/dirichlet_form.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dlab {
namespace {

double sup_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

EdgeField difference(const EdgeField& a, const EdgeField& b) {
  return EdgeField::antisymmetric(a.values - b.values);
}

}  // namespace

AssumptionReport check_assumptions(const DiscreteSpace& space, const CoefficientSet& coeffs) {
  coeffs.check_sizes(space);
  AssumptionReport r;
  r.symmetric_a = coeffs.a.symmetric;
  r.min_a = coeffs.a.values.size() ? coeffs.a.values.minCoeff() : coeffs.lambda;
  r.elliptic = coeffs.lambda > 0.0 && r.min_a >= coeffs.lambda;

  const VertexField div1 = divergence(space, coeffs.theta1);
  const VertexField div2 = divergence(space, coeffs.theta2);
  for (Index x = 0; x < space.size(); ++x) {
    if (!r.violating_vertex_1 && coeffs.c[x] < div1[x]) r.violating_vertex_1 = x;
    if (!r.violating_vertex_2 && coeffs.c[x] < div2[x]) r.violating_vertex_2 = x;
  }
  r.positivity_1 = !r.violating_vertex_1;
  r.positivity_2 = !r.violating_vertex_2;

  Bounds& b = r.bounds;
  b.a_sup = sup_abs(coeffs.a.values);
  b.b1_sup = sup_abs(derivation_norm(space, coeffs.theta1));
  b.b2_sup = sup_abs(derivation_norm(space, coeffs.theta2));
  b.div_b1_sup = sup_abs(div1);
  b.div_b2_sup = sup_abs(div2);
  b.c_sup = sup_abs(coeffs.c);
  b.b_diff_sup = sup_abs(derivation_norm(space, difference(coeffs.theta1, coeffs.theta2)));
  return r;
}

FormAssembly assemble(const DiscreteSpace& space, const CoefficientSet& coeffs) {
  coeffs.check_sizes(space);
  const auto n = static_cast<Eigen::Index>(space.size());
  Mat B = Mat::Zero(n, n);
  for (Index x = 0; x < space.size(); ++x) {
    const auto xi = static_cast<Eigen::Index>(x);
    for (const auto& inc : space.incident(x)) {
      const auto yi = static_cast<Eigen::Index>(inc.neighbor);
      const double hw = 0.5 * space.edges()[inc.edge].conductance;
      // Ch_a(f,g) = 1/2 sum_edges w a df dg.
      const double a = coeffs.a.at(inc);
      B(xi, xi) += hw * a;
      B(xi, yi) -= hw * a;
      // int b1(f) g dm: f = delta_p, g = delta_x.
      const double t1 = coeffs.theta1.at(inc);
      B(yi, xi) += hw * t1;
      B(xi, xi) -= hw * t1;
      // int f b2(g) dm: f = delta_x, g = delta_p.
      const double t2 = coeffs.theta2.at(inc);
      B(xi, yi) += hw * t2;
      B(xi, xi) -= hw * t2;
    }
    B(xi, xi) += space.measure()[x] * coeffs.c[x];
  }

  FormAssembly form{space, coeffs, B, Mat(), Mat(), coeffs.lambda, {}, false};
  form.B_sym = 0.5 * (B + B.transpose());
  form.B_anti = B - form.B_sym;
  form.assumptions = check_assumptions(space, coeffs);
  form.validated = form.assumptions.ok();
  return form;
}

SectorConstant sector_constant(const FormAssembly& form, Index samples, std::uint64_t seed) {
  require(form.lambda > 0.0, "sector constant requires lambda > 0");
  SectorConstant sc;
  // |A_check| = 0 for a symmetric multiplier.
  sc.analytic = 2.0 * std::sqrt(2.0 / form.lambda) * form.assumptions.bounds.b_diff_sup + 1.0;

  const Mat M = form.space.measure().asDiagonal();
  const Mat B1 = form.B + M;
  const Mat S1 = form.B_sym + M;
  Eigen::LLT<Mat> llt(S1);
  require(llt.info() == Eigen::Success,
          "symmetric part of E_1 is not positive definite; coefficients violate the "
          "form assumptions");
  // sup |f^T B1 g| / sqrt(f^T S1 f g^T S1 g) = ||L^{-1} B1 L^{-T}||_2 with S1 = L L^T.
  const Mat Linv = llt.matrixL().solve(Mat::Identity(S1.rows(), S1.cols()));
  const Mat K = Linv * B1 * Linv.transpose();
  Eigen::JacobiSVD<Mat> svd(K);
  sc.measured = svd.singularValues()(0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto n = S1.rows();
  for (Index s = 0; s < samples; ++s) {
    Vec f(n), g(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i) g[i] = normal(rng);
    const double num = std::abs(f.dot(B1 * g));
    const double den = std::sqrt(f.dot(S1 * f) * g.dot(S1 * g));
    if (den > 0.0) sc.sampled = std::max(sc.sampled, num / den);
  }
  return sc;
}

MarkovStructure markov_structure(const Mat& L, const Mat& L_hat) {
  MarkovStructure ms;
  ms.min_offdiag_L = 0.0;
  ms.min_offdiag_L_hat = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) {
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      if (i == j) continue;
      ms.min_offdiag_L = std::min(ms.min_offdiag_L, L(i, j));
      ms.min_offdiag_L_hat = std::min(ms.min_offdiag_L_hat, L_hat(i, j));
    }
  }
  // Rounding noise when a = |theta1 - theta2| exactly.
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::max(L.cwiseAbs().maxCoeff(), L_hat.cwiseAbs().maxCoeff());
  ms.nonnegative = ms.min_offdiag_L >= -tol && ms.min_offdiag_L_hat >= -tol;
  return ms;
}

GeneratorPair generators(const FormAssembly& form) {
  const Vec& m = form.space.measure();
  const Vec minv = m.cwiseInverse();
  GeneratorPair gen;
  gen.L = -(minv.asDiagonal() * form.B.transpose());
  gen.L_hat = -(minv.asDiagonal() * form.B);
  gen.m = m;
  gen.markov = markov_structure(gen.L, gen.L_hat);
  return gen;
}

GeneratorDifference generator_difference_check(const FormAssembly& form,
                                               const GeneratorPair& gen) {
  const auto& space = form.space;
  const auto& co = form.coeffs;
  const VertexField div1 = divergence(space, co.theta1);
  const VertexField div2 = divergence(space, co.theta2);
  const auto n = static_cast<Eigen::Index>(space.size());
  const Mat diff = gen.L_hat - gen.L;
  GeneratorDifference out;
  out.scale = gen.L.cwiseAbs().rowwise().sum().maxCoeff();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec f = Vec::Unit(n, j);
    const Vec drift =
        2.0 * apply_derivation(space, co.theta1, f).bf - 2.0 * apply_derivation(space, co.theta2, f).bf;
    const Vec implemented = drift + f.cwiseProduct(div1 - div2);
    const Vec flipped = drift - f.cwiseProduct(div1 - div2);
    out.max_residual = std::max(out.max_residual, (diff.col(j) - implemented).cwiseAbs().maxCoeff());
    out.flipped_sign_residual =
        std::max(out.flipped_sign_residual, (diff.col(j) - flipped).cwiseAbs().maxCoeff());
  }
  return out;
}

UpwindResult markovize_upwind(const DiscreteSpace& space, const CoefficientSet& coeffs) {
  coeffs.check_sizes(space);
  CoefficientSet mod = coeffs;
  const Vec drift = (coeffs.theta1.values - coeffs.theta2.values).cwiseAbs();
  mod.a.values = coeffs.a.values.cwiseMax(drift);
  const GeneratorPair base = generators(assemble(space, coeffs));
  UpwindResult r{generators(assemble(space, mod)), mod.a, 0.0, 0.0};
  r.modification_norm =
      mod.a.values.size() ? (mod.a.values - coeffs.a.values).maxCoeff() : 0.0;
  r.operator_change = (r.generators.L - base.L).cwiseAbs().rowwise().sum().maxCoeff();
  return r;
}

}  // namespace dlab
