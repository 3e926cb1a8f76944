#include "dlab/semigroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

#include <unsupported/Eigen/MatrixFunctions>

#include "dlab/calculus.hpp"
#include "dlab/diagnostics.hpp"

namespace dlab {

SemigroupEvaluator::SemigroupEvaluator(Mat L, Vec m, SemigroupMethod method)
    : L_(std::move(L)), m_(std::move(m)), method_(method) {
  require(L_.rows() == L_.cols(), "generator must be square");
  require(m_.size() == L_.rows(), "measure length must match the generator");
  require((m_.array() > 0.0).all(), "measure must be positive");
  if (method_ == SemigroupMethod::kSpectral) {
    require(is_self_adjoint(L_, m_, 1e-10),
            "spectral method requires a generator self-adjoint in L^2(m)");
    sqrt_m_ = m_.cwiseSqrt();
    Mat S = sqrt_m_.asDiagonal() * L_ * sqrt_m_.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    require(es.info() == Eigen::Success, "eigendecomposition failed");
    eig_ = es.eigenvalues();
    Q_ = es.eigenvectors();
  }
}

bool SemigroupEvaluator::is_self_adjoint(const Mat& L, const Vec& m, double tol) {
  const Mat ML = m.asDiagonal() * L;
  const double scale = std::max(1e-300, ML.cwiseAbs().maxCoeff());
  return (ML - ML.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Mat SemigroupEvaluator::matrix(double t) const {
  require(t >= 0.0, "semigroup time must be nonnegative");
  if (t == 0.0) return Mat::Identity(L_.rows(), L_.cols());
  if (method_ == SemigroupMethod::kSpectral) {
    const Vec e = (t * eig_).array().exp().matrix();
    return sqrt_m_.cwiseInverse().asDiagonal() * Q_ * e.asDiagonal() * Q_.transpose() *
           sqrt_m_.asDiagonal();
  }
  return (t * L_).exp();
}

std::vector<Mat> SemigroupEvaluator::evolve_block(const Mat& F,
                                                 const std::vector<double>& times) const {
  require(F.rows() == L_.rows(), "block row count must match the generator");
  std::vector<Mat> out;
  out.reserve(times.size());
  Mat cur = F;
  double prev = 0.0;
  double step = -1.0;
  Mat inc;
  for (double t : times) {
    require(t >= prev, "evolve_block times must be non-decreasing");
    const double gap = t - prev;
    if (gap > 0.0) {
      if (!(step > 0.0 && std::abs(gap - step) <= 1e-12 * step)) {
        step = gap;
        inc = matrix(gap);
      }
      cur = inc * cur;
    }
    out.push_back(cur);
    prev = t;
  }
  return out;
}

Vec SemigroupEvaluator::evolve(const Vec& f, double t) const {
  require(f.size() == L_.rows(), "field length must match the generator");
  require(t >= 0.0, "semigroup time must be nonnegative");
  if (t == 0.0) return f;
  if (method_ == SemigroupMethod::kSpectral) {
    const Vec e = (t * eig_).array().exp().matrix();
    const Vec coeff = Q_.transpose() * sqrt_m_.cwiseProduct(f);
    return sqrt_m_.cwiseInverse().cwiseProduct(Q_ * e.cwiseProduct(coeff));
  }
  return matrix(t) * f;
}

Mat SemigroupEvaluator::resolvent_matrix(double alpha) const {
  require(alpha > 0.0, "resolvent parameter alpha must be positive");
  if (method_ == SemigroupMethod::kSpectral) {
    const Vec r = (alpha - eig_.array()).inverse().matrix();
    return sqrt_m_.cwiseInverse().asDiagonal() * Q_ * r.asDiagonal() * Q_.transpose() *
           sqrt_m_.asDiagonal();
  }
  const Mat A = alpha * Mat::Identity(L_.rows(), L_.cols()) - L_;
  Eigen::FullPivLU<Mat> lu(A);
  require(lu.isInvertible(), "resolvent system alpha - L is singular");
  return lu.inverse();
}

Vec SemigroupEvaluator::resolvent(const Vec& f, double alpha) const {
  require(f.size() == L_.rows(), "field length must match the generator");
  require(alpha > 0.0, "resolvent parameter alpha must be positive");
  if (method_ == SemigroupMethod::kSpectral) {
    const Vec r = (alpha - eig_.array()).inverse().matrix();
    const Vec coeff = Q_.transpose() * sqrt_m_.cwiseProduct(f);
    return sqrt_m_.cwiseInverse().cwiseProduct(Q_ * r.cwiseProduct(coeff));
  }
  const Mat A = alpha * Mat::Identity(L_.rows(), L_.cols()) - L_;
  Eigen::FullPivLU<Mat> lu(A);
  require(lu.isInvertible(), "resolvent system alpha - L is singular");
  return lu.solve(f);
}

Vec evolve(const Mat& L, const Vec& f, double t) {
  require(t >= 0.0, "semigroup time must be nonnegative");
  require(f.size() == L.rows(), "field length must match the generator");
  if (t == 0.0) return f;
  return (t * L).exp() * f;
}

Vec resolvent(const Mat& L, const Vec& f, double alpha) {
  require(alpha > 0.0, "resolvent parameter alpha must be positive");
  require(f.size() == L.rows(), "field length must match the generator");
  const Mat A = alpha * Mat::Identity(L.rows(), L.cols()) - L;
  Eigen::FullPivLU<Mat> lu(A);
  require(lu.isInvertible(), "resolvent system alpha - L is singular");
  return lu.solve(f);
}

double resolvent_form_residual(const FormAssembly& form, const Vec& f, double alpha) {
  const GeneratorPair gen = generators(form);
  const Vec u = resolvent(gen.L, f, alpha);
  const Vec& m = form.space.measure();
  // E_alpha(u, g) over all basis g at once: u^T B + alpha (u m)^T.
  const Vec lhs = form.B.transpose() * u + alpha * u.cwiseProduct(m);
  const Vec rhs = f.cwiseProduct(m);
  const double scale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  return (lhs - rhs).cwiseAbs().maxCoeff() / scale;
}

double laplace_consistency(const Mat& L, const Vec& f, double alpha) {
  require(alpha > 0.0, "resolvent parameter alpha must be positive");
  static constexpr std::array<double, 8> kNodes = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
      0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> kWeights = {
      0.1012285362903763, 0.2223810344533745, 0.3137066661265593, 0.3626837833783620,
      0.3626837833783620, 0.3137066661265593, 0.2223810344533745, 0.1012285362903763};
  const double norm_L = L.cwiseAbs().rowwise().sum().maxCoeff();
  const double tau = 1.0 / (alpha + norm_L);
  const Mat step = (tau * L).exp();
  std::array<Mat, 8> inner;
  for (std::size_t j = 0; j < kNodes.size(); ++j) {
    inner[j] = (0.5 * tau * (kNodes[j] + 1.0) * L).exp();
  }
  const Vec exact = resolvent(L, f, alpha);
  Vec acc = Vec::Zero(f.size());
  Vec u = f;
  const double t_max = 40.0 / alpha;
  for (double t0 = 0.0; t0 < t_max; t0 += tau) {
    for (std::size_t j = 0; j < kNodes.size(); ++j) {
      const double t = t0 + 0.5 * tau * (kNodes[j] + 1.0);
      acc += 0.5 * tau * kWeights[j] * std::exp(-alpha * t) * (inner[j] * u);
    }
    u = step * u;
  }
  return (acc - exact).cwiseAbs().maxCoeff() / std::max(1.0, exact.cwiseAbs().maxCoeff());
}

namespace {

HeatKernel kernel_from_matrix(const Mat& T, const Vec& m, double t) {
  HeatKernel hk;
  hk.t = t;
  hk.p = T * m.cwiseInverse().asDiagonal();
  MarkovReport& r = hk.report;
  r.min_kernel = hk.p.minCoeff();
  const Vec mass = T.rowwise().sum();
  r.max_mass = mass.maxCoeff();
  r.positivity = r.min_kernel >= -1e-12;
  r.contraction = r.max_mass <= 1.0 + 1e-12;
  r.conservative_defect = (mass.array() - 1.0).abs().maxCoeff();
  return hk;
}

}  // namespace

HeatKernel heat_kernel(const Mat& L, const Vec& m, double t) {
  require(t > 0.0, "heat kernel time must be positive");
  require(m.size() == L.rows(), "measure length must match the generator");
  return kernel_from_matrix((t * L).exp(), m, t);
}

HeatKernel heat_kernel(const SemigroupEvaluator& semigroup, double t) {
  require(t > 0.0, "heat kernel time must be positive");
  return kernel_from_matrix(semigroup.matrix(t), semigroup.measure(), t);
}

Spectrum cheeger_spectrum(const DiscreteSpace& space, Index k_max) {
  require(k_max <= space.size(), "k_max exceeds the number of vertices");
  const Vec& m = space.measure();
  Mat K = -(m.asDiagonal() * laplacian_matrix(space));
  K = 0.5 * (K + K.transpose()).eval();
  const Mat M = m.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, M);
  require(es.info() == Eigen::Success, "generalized eigendecomposition failed");
  const auto k = static_cast<Eigen::Index>(k_max);
  Spectrum sp{es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
  for (Eigen::Index j = 0; j < k; ++j) {
    auto col = sp.vectors.col(j);
    Eigen::Index imax = 0;
    const double big = col.cwiseAbs().maxCoeff();
    // First entry within rounding of the largest magnitude decides the sign,
    // so that exactly tied entries pick a deterministic representative.
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col[i]) >= big * (1.0 - 1e-9)) {
        imax = i;
        break;
      }
    }
    if (col[imax] < 0.0) col = -col;
    // Renormalize in L^2(m) to remove solver drift.
    col /= std::sqrt(col.cwiseProduct(col).dot(m));
  }
  return sp;
}

GaussianFit gaussian_bound_fit(const std::vector<HeatKernel>& kernels, const DiscreteSpace& space,
                               const Mat& metric, const GaussianFitOptions& options) {
  require(!kernels.empty(), "gaussian fit needs at least one kernel");
  require(options.nu_min <= options.nu_max, "nu bracket is empty");
  const auto n = static_cast<Eigen::Index>(space.size());
  require(metric.rows() == n && metric.cols() == n, "metric table size mismatch");
  const Vec& m = space.measure();

  struct Sample {
    double log_t, x2, logp;
  };
  std::vector<Sample> samples;
  GaussianFit fit;
  std::set<double> ts, xs;
  for (const auto& k : kernels) {
    require(k.t > 0.0 && k.p.rows() == n && k.p.cols() == n, "kernel shape mismatch");
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y) {
        const double p = k.p(x, y);
        if (!(p * m[y] >= options.entry_floor)) {
          ++fit.samples_below_floor;
          continue;
        }
        const double d = metric(x, y);
        samples.push_back({std::log(k.t), d * d / k.t, std::log(p)});
        ts.insert(k.t);
        xs.insert(d * d / k.t);
      }
    }
  }
  require(!samples.empty(), "degenerate grid: no kernel samples above the floor");
  fit.samples_used = samples.size();

  const bool nu_free = ts.size() > 1 && options.nu_min < options.nu_max;
  const bool c2_free = xs.size() > 1;
  double nu = 0.5 * (options.nu_min + options.nu_max);
  double c2 = 1.0;
  auto solve = [&](bool fit_nu) {
    // Columns: log C1, [-log t], [-d^2/t].
    const Eigen::Index cols = 1 + (fit_nu ? 1 : 0) + (c2_free ? 1 : 0);
    Mat A(static_cast<Eigen::Index>(samples.size()), cols);
    Vec b(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      Eigen::Index c = 0;
      A(r, c++) = 1.0;
      if (fit_nu) A(r, c++) = -samples[i].log_t;
      if (c2_free) A(r, c++) = -samples[i].x2;
      b[r] = samples[i].logp + (fit_nu ? 0.0 : nu * samples[i].log_t) +
             (c2_free ? 0.0 : c2 * samples[i].x2);
    }
    const Vec sol = A.colPivHouseholderQr().solve(b);
    Eigen::Index c = 1;
    if (fit_nu) nu = sol[c++];
    if (c2_free) c2 = sol[c++];
  };
  solve(nu_free);
  if (nu_free && (nu < options.nu_min || nu > options.nu_max)) {
    nu = std::clamp(nu, options.nu_min, options.nu_max);
    solve(false);
  }
  fit.nu = nu;
  fit.C2 = c2;

  // Inflate log C1 to the largest residual so the envelope dominates.
  double log_c1 = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    log_c1 = std::max(log_c1, s.logp + nu * s.log_t + c2 * s.x2);
  }
  fit.C1 = options.C1_override ? *options.C1_override : std::exp(log_c1);
  const double used_log_c1 = std::log(fit.C1);
  fit.worst_ratio = 0.0;
  for (const auto& s : samples) {
    fit.worst_ratio =
        std::max(fit.worst_ratio, std::exp(s.logp - (used_log_c1 - nu * s.log_t - c2 * s.x2)));
  }
  fit.holds = fit.C1 > 0.0 && std::isfinite(fit.C1) && fit.C2 > 0.0 &&
              fit.worst_ratio <= 1.0 + 1e-12;
  fit.bishop_gromov_c = bishop_gromov_constant(space, metric, fit.nu);
  return fit;
}

}  // namespace dlab
