#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include <dlab/constructions.hpp>
#include <dlab/diagnostics.hpp>

#include "generators.hpp"

using namespace dlab;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::vector<double> default_r_grid() {
  std::vector<double> r;
  for (int i = 1; i <= 12; ++i) r.push_back(0.25 * i);
  return r;
}

AmbientFunction cosine() {
  return [](const AmbientSpace& a, Index p) { return std::cos((*a.coords())(p, 0)); };
}

}  // namespace

TEST_CASE("erfc against a 30-digit oracle") {
  const std::vector<std::pair<double, double>> oracle = {
      {-6.0, 1.9999999999999999785},   {-2.5, 1.9995930479825550411},
      {-0.5, 1.5204998778130465377},   {0.0, 1.0},
      {0.5, 0.47950012218695346232},   {1.0, 0.15729920705028513066},
      {2.0, 0.0046777349810472658379}, {3.7, 1.6715105790914597513e-7},
      {5.0, 1.5374597944280348502e-12}, {10.0, 2.088487583762544757e-45},
      {30.0, 0.0}};
  for (const auto& [x, v] : oracle) CHECK(std::abs(dlab::erfc(x) - v) <= 1e-12);
  CHECK(std::abs(dlab::erfc(1.0) - 0.1572992070502851) <= 1e-12);
  CHECK(dlab::erfc(0.0) == 1.0);
}

TEST_CASE("erfc symmetry and monotonicity") {
  for (int i = 0; i <= 360; ++i) {
    const double x = -6.0 + i * (36.0 / 360.0);
    CHECK(std::abs(dlab::erfc(x) + dlab::erfc(-x) - 2.0) <= 1e-12);
  }
  double prev = dlab::erfc(-5.0);
  for (int i = 1; i < 100; ++i) {
    const double x = -5.0 + i * (10.0 / 99.0);
    const double v = dlab::erfc(x);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("criterion on trivial coefficients") {
  for (auto kind : {ModelKind::kCircle, ModelKind::kInterval}) {
    const auto s = model_space(kind, 32);
    ConservativenessOptions opt;
    opt.r_grid = default_r_grid();
    opt.exact_times = {0.1, 1.0, 10.0};
    const auto rep = conservativeness_criterion(s, CoefficientSet::trivial(s), opt);
    CHECK(rep.div_matches[0]);
    CHECK(rep.div_matches[1]);
    CHECK(rep.applicable);
    CHECK(rep.criterion_decreasing);
    CHECK(rep.drift_bound_ok);
    REQUIRE(rep.exact_defect.size() == 3);
    for (const auto& [t, d] : rep.exact_defect) CHECK(d <= 1e-12);
    REQUIRE(rep.criterion_table.size() == opt.r_grid.size());
    for (std::size_t i = 0; i < rep.criterion_table.size(); ++i) {
      CHECK(rep.criterion_table[i].product >= 0.0);
      if (i) CHECK(rep.criterion_table[i].r > rep.criterion_table[i - 1].r);
    }
  }
}

TEST_CASE("criterion flags mismatched divergences") {
  const auto s = dlab::testing::two_vertex();
  CoefficientSet co;
  co.a = EdgeField::symmetric_field(Vec::Ones(1));
  co.lambda = 1.0;
  co.theta1 = EdgeField::antisymmetric(Vec::Ones(1));
  co.theta2 = EdgeField::antisymmetric(Vec::Zero(1));
  co.c = v2(1, -1);
  ConservativenessOptions opt;
  opt.r_grid = {0.5, 1.0, 2.0};
  const auto rep = conservativeness_criterion(s, co, opt);
  CHECK(rep.div_matches[0]);
  CHECK_FALSE(rep.div_matches[1]);
  CHECK(rep.div_mismatch[1] == doctest::Approx(1.0));
  CHECK_FALSE(rep.applicable);
  REQUIRE(rep.exact_defect.size() == 1);
  CHECK(rep.exact_defect[0].first == 1.0);
  CHECK(rep.exact_defect[0].second > 0.1);

  opt.r_grid.clear();
  CHECK_THROWS_AS(conservativeness_criterion(s, co, opt), Error);
}

TEST_CASE("matching divergences on resolvent coefficients are conservative") {
  const auto seq = model_sequence({ModelKind::kCircle, {64}, 128, 0.0});
  const auto cs = resolvent_coefficients(
      seq, cosine(), 1.0, 1.0, [](const AmbientSpace&, Index) { return 0.0; }, 0.0);
  ConservativenessOptions opt;
  opt.r_grid = default_r_grid();
  opt.exact_times = {0.1, 1.0, 10.0};
  const auto rep = conservativeness_criterion(seq.members[0], cs.members[0], opt);
  CHECK(rep.div_matches[0]);
  CHECK(rep.div_matches[1]);
  CHECK(rep.applicable);
  for (const auto& [t, d] : rep.exact_defect) CHECK(d <= 1e-10);
}

TEST_CASE("volume growth") {
  const auto s = model_space(ModelKind::kCircle, 16);
  CHECK(volume_growth_check(s, s.total_measure() * (1 + 1e-12), 0.0));
  CHECK_FALSE(volume_growth_check(s, 0.1, 0.0));
  const auto t = model_space(ModelKind::kTorus, 5);
  CHECK(volume_growth_check(t, t.total_measure() * (1 + 1e-12), 0.0));
}

TEST_CASE("Bishop-Gromov constant") {
  const auto s = model_space(ModelKind::kCircle, 16);
  const double half = bishop_gromov_constant(s, 0.5);
  const double five = bishop_gromov_constant(s, 5.0);
  CHECK(half > 0.1);
  CHECK(five < 1e-3 * half);
  // m(B_pi) = 2 pi - h covers all but the antipode; the ratio at r = pi bounds c.
  CHECK(five <= 2.0 * M_PI / std::pow(M_PI, 10.0));
}
