#include <doctest.h>

#include <cmath>

#include <dlab/constructions.hpp>
#include <dlab/dirichlet_form.hpp>
#include <dlab/semigroup.hpp>

using namespace dlab;

namespace {

AmbientFunction cosine(double freq = 1.0) {
  return [=](const AmbientSpace& a, Index p) { return std::cos(freq * (*a.coords())(p, 0)); };
}

const AmbientFunction kZero = [](const AmbientSpace&, Index) { return 0.0; };

Vec solve_resolvent(const DiscreteSpace& s, const Vec& g, double lam) {
  const auto n = static_cast<Eigen::Index>(s.size());
  const Mat A = lam * Mat::Identity(n, n) - laplacian_matrix(s);
  return A.fullPivLu().solve(g);
}

}  // namespace

TEST_CASE("model kinds") {
  CHECK(parse_model_kind("torus") == ModelKind::kTorus);
  CHECK(to_string(ModelKind::kInterval) == "interval");
  CHECK_THROWS_AS(parse_model_kind("sphere"), Error);
}

TEST_CASE("circle with four vertices") {
  const auto s = model_space(ModelKind::kCircle, 4);
  REQUIRE(s.edge_count() == 4);
  for (const auto& e : s.edges()) {
    CHECK(e.conductance == doctest::Approx(2.0 / M_PI).epsilon(1e-15));
    CHECK(e.length == doctest::Approx(M_PI / 2).epsilon(1e-15));
  }
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(s.measure()[i] == doctest::Approx(M_PI / 2).epsilon(1e-15));
  CHECK(s.total_measure() == doctest::Approx(2 * M_PI).epsilon(1e-15));
}

TEST_CASE("degenerate sizes") {
  CHECK_THROWS_AS(model_space(ModelKind::kInterval, 2), Error);
  CHECK_THROWS_AS(model_space(ModelKind::kCircle, 2), Error);
  CHECK_THROWS_AS(model_space(ModelKind::kTorus, 2), Error);
  CHECK_THROWS_AS(model_sequence({ModelKind::kCircle, {16, 8}, 64, 0.0}), Error);
  CHECK(model_sequence({ModelKind::kCircle, {8, 16}, 16, 0.0}).limit.size() == 16);
}

TEST_CASE("circle diameter") {
  for (Index n : {4u, 8u, 16u, 64u}) {
    const auto s = model_space(ModelKind::kCircle, n);
    CHECK(shortest_path_metric(s).maxCoeff() == doctest::Approx(M_PI).epsilon(1e-12));
  }
  const auto odd = model_space(ModelKind::kCircle, 9);
  CHECK(shortest_path_metric(odd).maxCoeff() == doctest::Approx(8 * M_PI / 9).epsilon(1e-12));
}

TEST_CASE("interval and torus geometry") {
  const auto iv = model_space(ModelKind::kInterval, 5, 2.0);
  CHECK(iv.total_measure() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(iv.measure()[0] == doctest::Approx(0.25));
  CHECK(iv.measure()[2] == doctest::Approx(0.5));
  CHECK(shortest_path_metric(iv).maxCoeff() == doctest::Approx(2.0));

  const auto t = model_space(ModelKind::kTorus, 4);
  CHECK(t.size() == 16);
  CHECK(t.edge_count() == 32);
  CHECK(t.total_measure() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(shortest_path_metric(t).maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("model sequences share one ambient and keep total measure") {
  for (auto kind : {ModelKind::kCircle, ModelKind::kInterval, ModelKind::kTorus}) {
    const auto seq = model_sequence({kind, {3, 6}, 12, 0.0});
    CHECK_NOTHROW(seq.validate());
    for (const auto& m : seq.members) {
      CHECK(m.ambient() == seq.ambient);
      CHECK(m.total_measure() == doctest::Approx(seq.limit.total_measure()).epsilon(1e-12));
    }
  }
  const auto def = model_sequence({ModelKind::kCircle, {8, 16}, 0, 0.0});
  CHECK(def.limit.size() == 64);
}

TEST_CASE("resolvent coefficients with g = 0") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16}, 32, 0.0});
  const auto cs = resolvent_coefficients(seq, kZero, 1.0, 0.5, kZero, 0.25);
  for (const auto& c : cs.members) {
    CHECK(c.theta1.values.isZero(0.0));
    CHECK(c.theta2.values.isZero(0.0));
    CHECK((c.c.array() == 0.25).all());
    CHECK(c.lambda == 0.5);
    CHECK((c.a.values.array() == 0.5).all());
  }
  CHECK_THROWS_AS(resolvent_coefficients(seq, kZero, 0.0, 0.5, kZero, 0.25), Error);
  CHECK_THROWS_AS(resolvent_coefficients(seq, kZero, 1.0, 0.0, kZero, 0.25), Error);
}

TEST_CASE("resolvent coefficients follow the circulant spectrum") {
  const auto seq = model_sequence({ModelKind::kCircle, {16}, 32, 0.0});
  const auto cs = resolvent_coefficients(seq, cosine(), 1.0, 1.0, kZero, 0.1);
  const auto& s = seq.members[0];
  const double h = 2 * M_PI / 16;
  const double lam1 = 2 * (1 - std::cos(h)) / (h * h);
  const Vec g = s.restrict(cosine());
  const Vec f = g / (1.0 + lam1);
  const auto grad = gradient_derivation(s, f);
  CHECK((cs.members[0].theta1.values - grad.values).cwiseAbs().maxCoeff() <= 1e-12);
  const Vec div = divergence(s, cs.members[0].theta1);
  CHECK((div - (f - g)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("resolvent coefficients satisfy the assumptions with bounded norms") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16, 32, 64, 128}, 256, 0.0});
  const AmbientFunction h = [](const AmbientSpace& a, Index p) {
    return 0.5 + 0.5 * std::sin((*a.coords())(p, 0));
  };
  const auto cs = resolvent_coefficients(seq, cosine(), 1.0, 1.0, h, 0.1, cosine(2.0));
  CHECK_NOTHROW(cs.check_alignment(seq));
  for (std::size_t i = 0; i < seq.members.size(); ++i) {
    const auto& s = seq.members[i];
    const auto& c = cs.members[i];
    CHECK(check_assumptions(s, c).ok());
    const Vec g1 = s.restrict(cosine()), g2 = s.restrict(cosine(2.0));
    const Vec f1 = solve_resolvent(s, g1, 1.0), f2 = solve_resolvent(s, g2, 1.0);
    CHECK((divergence(s, c.theta1) - (f1 - g1)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((divergence(s, c.theta2) - (f2 - g2)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(c.a.values.minCoeff() >= c.lambda);
  }
  CHECK(check_assumptions(seq.limit, cs.limit).ok());
  const Bounds b = cs.uniform_bounds(seq);
  // f1 ~ cos / 2 and f2 ~ cos 2x / 5, so |b1| -> 1/(2 sqrt 2) |sin| and div b2 -> -4/5 cos 2x.
  CHECK(b.b1_sup < 0.5);
  CHECK(b.b2_sup < 0.5);
  CHECK(b.div_b1_sup < 1.0);
  CHECK(b.div_b2_sup < 1.0);
  CHECK(b.a_sup <= 2.0 + 1e-12);
}

TEST_CASE("eigen coefficients") {
  SUBCASE("k = 0 is the constant mode") {
    const auto seq = model_sequence({ModelKind::kInterval, {8}, 32, 0.0});
    const auto cs = eigen_coefficients(seq, 0, 0, 0.1);
    CHECK(cs.members[0].theta1.values.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(cs.limit.theta1.values.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("interval k = 1") {
    const auto seq = model_sequence({ModelKind::kInterval, {16}, 32, 0.0});
    const auto cs = eigen_coefficients(seq, 1, 2, 0.1);
    const auto& s = seq.members[0];
    const auto sp = cheeger_spectrum(s, 3);
    const Vec u = sp.vectors.col(1);
    const Vec div = divergence(s, cs.members[0].theta1);
    const double sign = div.dot(u) < 0 ? 1.0 : -1.0;
    CHECK((div + sign * sp.values[1] * u).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(check_assumptions(s, cs.members[0]).ok());
    CHECK(cs.members[0].lambda == 1.0);
  }
  SUBCASE("degenerate circle index") {
    const auto seq = model_sequence({ModelKind::kCircle, {8}, 32, 0.0});
    CHECK_THROWS_AS(eigen_coefficients(seq, 1, 1, 0.1), Error);
  }
  SUBCASE("refinement along the interval") {
    const auto seq = model_sequence({ModelKind::kInterval, {8, 16, 32, 64}, 256, 0.0});
    const auto cs = eigen_coefficients(seq, 1, 1, 0.1);
    const auto fam = build_test_family(seq.ambient, {0, 64, 128, 192, 255}, {0.25, 0.5}, 4);
    const auto rep = coefficient_convergence_defects(seq, cs, fam);
    const auto mono = rep.monotonicity();
    CHECK(mono.at("b1_weak"));
    CHECK(mono.at("div1_weak"));
    const auto s = rep.series("b1_weak");
    CHECK(s.back() < s.front());
  }
}
