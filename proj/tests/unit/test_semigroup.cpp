#include <doctest.h>

#include <cmath>
#include <vector>

#include <dlab/constructions.hpp>
#include <dlab/semigroup.hpp>

#include "generators.hpp"

using namespace dlab;
using dlab::testing::CoefficientOptions;
using dlab::testing::Gen;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat two_state() {
  Mat L(2, 2);
  L << -0.5, 0.5, 0.5, -0.5;
  return L;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("two state semigroup and resolvent") {
  const Mat L = two_state();
  for (double t : {0.0, 0.3, 1.0, 4.0}) {
    const Vec u = evolve(L, v2(1, 0), t);
    CHECK(u[0] == doctest::Approx(0.5 * (1 + std::exp(-t))).epsilon(1e-13));
    CHECK(u[1] == doctest::Approx(0.5 * (1 - std::exp(-t))).epsilon(1e-13));
  }
  const Vec g = resolvent(L, v2(1, 0), 1.0);
  CHECK(g[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(0.25).epsilon(1e-14));
  const auto k = heat_kernel(L, Vec::Ones(2), 1.0);
  CHECK(k.p(0, 0) == doctest::Approx(0.5 * (1 + std::exp(-1.0))).epsilon(1e-13));
  CHECK(k.report.positivity);
  CHECK(k.report.contraction);
  CHECK(k.report.conservative_defect <= 1e-12);
}

TEST_CASE("trivial cases") {
  Gen g(2);
  const Vec f = g.field(5);
  CHECK(evolve(Mat::Zero(5, 5), f, 3.0) == f);
  CHECK((resolvent(Mat::Zero(5, 5), f, 1.0) - f).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(evolve(two_state(), v2(0.2, 0.9), 0.0) == v2(0.2, 0.9));
  const Vec c = evolve(two_state(), v2(3, 3), 2.5);
  CHECK((c - v2(3, 3)).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK_THROWS_AS(evolve(two_state(), v2(1, 0), -1.0), Error);
  CHECK_THROWS_AS(resolvent(two_state(), v2(1, 0), 0.0), Error);
}

TEST_CASE("alpha G_alpha f approaches f like 1/alpha") {
  const Mat L = two_state();
  const Vec f = v2(1, 0);
  std::vector<double> err;
  for (double a : {10.0, 100.0, 1000.0}) err.push_back((a * resolvent(L, f, a) - f).cwiseAbs().maxCoeff());
  // err = 1 / (2 (alpha + 1)).
  CHECK(err[0] / err[1] == doctest::Approx(101.0 / 11.0).epsilon(1e-10));
  CHECK(err[1] / err[2] == doctest::Approx(1001.0 / 101.0).epsilon(1e-10));
}

TEST_CASE("killing makes the semigroup strictly sub-Markov") {
  const auto s = model_space(ModelKind::kCircle, 8);
  auto co = CoefficientSet::trivial(s);
  co.c[3] = 0.7;
  const auto gen = generators(assemble(s, co));
  const auto k = heat_kernel(gen.L, s.measure(), 1.0);
  CHECK(k.report.conservative_defect > 1e-3);
  CHECK(k.report.contraction);
  CHECK(k.report.positivity);
  CHECK(k.report.max_mass < 1.0);
}

TEST_CASE("duality, resolvent equation and semigroup law on random forms") {
  Gen g(77);
  for (int trial = 0; trial < 8; ++trial) {
    const auto s = model_space(ModelKind::kCircle, 6 + g.index(12));
    const auto form = assemble(s, dlab::testing::random_coefficients(g, s));
    const auto gen = generators(form);
    const Vec& m = s.measure();
    const SemigroupEvaluator T(gen.L, m), That(gen.L_hat, m);

    for (int k = 0; k < 5; ++k) {
      const Vec f = g.field(s.size()), h = g.field(s.size());
      const double t = g.uniform(0.01, 3.0);
      const double lhs = inner_m(T.evolve(f, t), h, m), rhs = inner_m(f, That.evolve(h, t), m);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
      const double alpha = g.uniform(0.1, 5.0);
      CHECK(resolvent_form_residual(form, f, alpha) <= 1e-9);
    }

    const double al = g.uniform(0.2, 3.0), be = g.uniform(0.2, 3.0);
    const Mat Ga = T.resolvent_matrix(al), Gb = T.resolvent_matrix(be);
    CHECK(max_abs(Ga - Gb - (be - al) * Ga * Gb) <= 1e-10 * std::max(1.0, max_abs(Ga)));

    const double t = g.uniform(0.05, 2.0), u = g.uniform(0.05, 2.0);
    const Mat Ttu = T.matrix(t + u);
    CHECK(max_abs(Ttu - T.matrix(t) * T.matrix(u)) <= 1e-10 * max_abs(Ttu));
    CHECK(max_abs(T.matrix(0.0) - Mat::Identity(Ttu.rows(), Ttu.cols())) == 0.0);

    const Vec f = g.field(s.size());
    CHECK(laplace_consistency(gen.L, f, al) <= 1e-8);
  }
}

TEST_CASE("Markov generators preserve [0, 1]") {
  Gen g(31);
  CoefficientOptions o;
  o.markov = true;
  for (int trial = 0; trial < 8; ++trial) {
    const auto s = model_space(ModelKind::kInterval, 5 + g.index(10));
    const auto gen = generators(assemble(s, dlab::testing::random_coefficients(g, s, o)));
    REQUIRE(gen.markov.nonnegative);
    const SemigroupEvaluator T(gen.L, s.measure());
    for (int k = 0; k < 5; ++k) {
      const Vec f = g.field(s.size(), 0.0, 1.0);
      const double t = g.uniform(0.0, 4.0);
      const Vec u = T.evolve(f, t);
      CHECK(u.minCoeff() >= -1e-12);
      CHECK(u.maxCoeff() <= 1.0 + 1e-12);
      const auto k2 = heat_kernel(T, t);
      CHECK(k2.report.min_kernel >= -1e-12);
      CHECK(k2.report.max_mass <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("spectral and dense methods agree for self-adjoint generators") {
  Gen g(12);
  CoefficientOptions o;
  o.equal_drifts = true;
  const auto s = model_space(ModelKind::kCircle, 14);
  const auto gen = generators(assemble(s, dlab::testing::random_coefficients(g, s, o)));
  REQUIRE(SemigroupEvaluator::is_self_adjoint(gen.L, s.measure()));
  const SemigroupEvaluator dense(gen.L, s.measure());
  const SemigroupEvaluator spec(gen.L, s.measure(), SemigroupMethod::kSpectral);
  for (double t : {0.01, 0.3, 2.0, 10.0}) CHECK(max_abs(dense.matrix(t) - spec.matrix(t)) <= 1e-9);
  CHECK(max_abs(dense.resolvent_matrix(0.7) - spec.resolvent_matrix(0.7)) <= 1e-9);

  const auto asym = generators(assemble(s, dlab::testing::random_coefficients(g, s)));
  CHECK_FALSE(SemigroupEvaluator::is_self_adjoint(asym.L, s.measure()));
  CHECK_THROWS_AS(SemigroupEvaluator(asym.L, s.measure(), SemigroupMethod::kSpectral), Error);
}

TEST_CASE("evolve block matches pointwise evolution") {
  Gen g(3);
  const auto s = model_space(ModelKind::kCircle, 10);
  const auto gen = generators(assemble(s, dlab::testing::random_coefficients(g, s)));
  const SemigroupEvaluator T(gen.L, s.measure());
  Mat F(10, 2);
  F.col(0) = g.field(10);
  F.col(1) = g.field(10);
  const std::vector<double> times = {0.0, 0.1, 0.2, 0.3, 0.7, 0.7, 1.5};
  const auto out = T.evolve_block(F, times);
  REQUIRE(out.size() == times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(max_abs(out[i] - T.matrix(times[i]) * F) <= 1e-12);
  CHECK_THROWS_AS(T.evolve_block(F, {0.5, 0.1}), Error);
}

TEST_CASE("Cheeger spectrum") {
  const auto unit = model_space(ModelKind::kCircle, 4, 4.0);
  const auto sp4 = cheeger_spectrum(unit, 4);
  CHECK(std::abs(sp4.values[0]) <= 1e-12);
  CHECK(sp4.values[1] == doctest::Approx(sp4.values[2]).epsilon(1e-12));
  CHECK(sp4.values[1] == doctest::Approx(2.0).epsilon(1e-12));

  double prev_gap = 1e300;
  for (Index n : {8u, 16u, 32u, 64u}) {
    const auto s = model_space(ModelKind::kCircle, n);
    const double h = 2.0 * M_PI / static_cast<double>(n);
    const auto sp = cheeger_spectrum(s, 3);
    const double expected = 2.0 * (1.0 - std::cos(2.0 * M_PI / static_cast<double>(n))) / (h * h);
    CHECK(sp.values[1] == doctest::Approx(expected).epsilon(1e-10));
    const double gap = std::abs(sp.values[1] - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
    const Mat gram = sp.vectors.transpose() * s.measure().asDiagonal() * sp.vectors;
    CHECK(max_abs(gram - Mat::Identity(3, 3)) <= 1e-10);
  }
}

TEST_CASE("Gaussian bound fit") {
  const auto s = model_space(ModelKind::kCircle, 64);
  const Mat d = shortest_path_metric(s);
  const auto gen = generators(assemble(s, CoefficientSet::trivial(s)));
  const SemigroupEvaluator T(gen.L, s.measure());
  std::vector<HeatKernel> ks;
  for (double t : {0.05, 0.1, 0.2, 0.5, 1.0}) ks.push_back(heat_kernel(T, t));

  const auto fit = gaussian_bound_fit(ks, s, d);
  CHECK(fit.holds);
  CHECK(fit.worst_ratio <= 1.0);
  CHECK(fit.nu > 0.3);
  CHECK(fit.nu < 0.7);
  CHECK(fit.C2 > 0.0);

  GaussianFitOptions tiny;
  tiny.C1_override = 1e-6;
  CHECK_FALSE(gaussian_bound_fit(ks, s, d, tiny).holds);

  CHECK_THROWS_AS(gaussian_bound_fit({}, s, d), Error);
}

TEST_CASE("Gaussian fit through a single sample") {
  const auto s = dlab::testing::two_vertex();
  const Mat d = shortest_path_metric(s);
  HeatKernel k = heat_kernel(two_state(), Vec::Ones(2), 0.5);
  // Keep a single usable entry.
  k.p << k.p(0, 0), 0.0, 0.0, 0.0;
  const auto fit = gaussian_bound_fit({k}, s, d);
  CHECK(fit.holds);
  CHECK(fit.samples_used == 1);
  CHECK(fit.worst_ratio == doctest::Approx(1.0).epsilon(1e-12));
}
