#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <dlab/constructions.hpp>
#include <dlab/convergence.hpp>
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

AmbientSpace line(const std::vector<double>& xs) {
  Mat c(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) c(static_cast<Eigen::Index>(i), 0) = xs[i];
  return AmbientSpace::from_coords(c);
}

std::vector<Index> iota(Index n, Index from = 0) {
  std::vector<Index> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

/// Members that are all the same space, with the same coefficients.
std::pair<SpaceSequence, CoefficientSequence> constant_sequence(Gen& g, Index copies) {
  const auto s = model_space(ModelKind::kCircle, 10);
  CoefficientOptions o;
  o.markov = true;
  const auto co = dlab::testing::random_coefficients(g, s, o);
  SpaceSequence seq{s.ambient(), std::vector<DiscreteSpace>(copies, s), s};
  CoefficientSequence cs{std::vector<CoefficientSet>(copies, co), co};
  return {seq, cs};
}

AmbientFunction cosine(double freq) {
  return [=](const AmbientSpace& a, Index p) { return std::cos(freq * (*a.coords())(p, 0)); };
}

}  // namespace

TEST_CASE("McShane examples") {
  const auto amb = line({0.0, 1.0, 0.5, 3.0});
  const Vec vals = v2(0.0, 1.0);
  const Vec half = mcshane_extend(amb, {0, 1}, vals, 1.0, 1.0, {2});
  CHECK(half[0] == doctest::Approx(0.5).epsilon(1e-15));
  const Vec same = mcshane_extend(amb, {0, 1}, vals, 1.0, 1.0, {0, 1});
  CHECK(same == vals);
  const Vec single = mcshane_extend(amb, {2}, Vec::Constant(1, 0.7), 0.0, 1.0, {0, 1, 2, 3});
  CHECK((single.array() == 0.7).all());
  CHECK_THROWS_AS(mcshane_extend(amb, {0, 1}, vals, 0.5, 1.0, {2}), Error);
}

TEST_CASE("McShane properties on random Holder samples") {
  Gen g(19);
  for (int trial = 0; trial < 30; ++trial) {
    const Index np = 12 + g.index(20);
    std::vector<double> xs;
    for (Index i = 0; i < np; ++i) xs.push_back(g.uniform(-3, 3));
    const auto amb = line(xs);
    const double beta = g.uniform(0.3, 1.0);
    const Index ns = 3 + g.index(np - 4);
    const auto sample = iota(ns);
    Vec vals(static_cast<Eigen::Index>(ns));
    for (Index i = 0; i < ns; ++i)
      vals[static_cast<Eigen::Index>(i)] = std::sin(2.0 * xs[i]) * g.uniform(0.5, 1.0);
    const double H = holder_quotient(amb, sample, vals, beta) * g.uniform(1.0, 2.0);
    const auto query = iota(np);
    const Vec ext = mcshane_extend(amb, sample, vals, H, beta, query);
    for (Index i = 0; i < ns; ++i) CHECK(ext[static_cast<Eigen::Index>(i)] == vals[static_cast<Eigen::Index>(i)]);
    CHECK(ext.minCoeff() >= vals.minCoeff());
    CHECK(ext.maxCoeff() <= vals.maxCoeff());
    CHECK(holder_quotient(amb, query, ext, beta) <= H * (1 + 1e-12));

    // An extra sample taken from the extension leaves the old samples alone.
    auto bigger = sample;
    bigger.push_back(ns);
    Vec vb(static_cast<Eigen::Index>(ns + 1));
    vb << vals, ext[static_cast<Eigen::Index>(ns)];
    const Vec ext2 = mcshane_extend(amb, bigger, vb, H, beta, sample);
    CHECK(ext2 == vals);
  }
}

TEST_CASE("transport reproduces a field on the same space") {
  Gen g(4);
  const auto s = model_space(ModelKind::kCircle, 12);
  const Vec f = g.field(12);
  CHECK(transport(s, f, s) == f);
}

TEST_CASE("constant sequences have zero defects") {
  Gen g(6);
  auto [seq, cs] = constant_sequence(g, 3);
  const auto fam = build_test_family(seq.ambient, {0, 5}, {0.5, 1.0}, 2);
  for (const auto& r : coefficient_convergence_defects(seq, cs, fam).records)
    CHECK(r.defect == 0.0);
  const auto rs = resolvent_semigroup_convergence(seq, cs, 1.0, {0.1, 0.5, 1.0}, fam);
  REQUIRE_FALSE(rs.records.empty());
  for (const auto& r : rs.records) CHECK(r.defect <= 1e-14);
  const auto fd = fdd_convergence_defect(seq, cs, {0.5, 1.0}, {cosine(1.0), cosine(2.0)});
  for (double d : fd) CHECK(d <= 1e-14);
}

TEST_CASE("relabeling members permutes the defects") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16}, 64, 0.0});
  const auto cs = resolvent_coefficients(
      seq, cosine(1.0), 1.0, 1.0, [](const AmbientSpace&, Index) { return 0.0; }, 0.1);
  const auto fam = build_test_family(seq.ambient, {0, 32}, {1.0}, 0);
  const auto a = resolvent_semigroup_convergence(seq, cs, 1.0, {0.5, 1.0}, fam);
  SpaceSequence rev{seq.ambient, {seq.members[1], seq.members[0]}, seq.limit};
  CoefficientSequence crev{{cs.members[1], cs.members[0]}, cs.limit};
  const auto b = resolvent_semigroup_convergence(rev, crev, 1.0, {0.5, 1.0}, fam);
  for (const auto& name : {"R", "S"}) {
    const auto sa = a.series(name), sb = b.series(name);
    CHECK(sa[0] == sb[1]);
    CHECK(sa[1] == sb[0]);
  }
}

TEST_CASE("alignment and parameter errors") {
  Gen g(8);
  auto [seq, cs] = constant_sequence(g, 2);
  const auto fam = build_test_family(seq.ambient, {0}, {1.0}, 0);
  CHECK_THROWS_AS(resolvent_semigroup_convergence(seq, cs, 0.0, {0.5}, fam), Error);
  cs.members.pop_back();
  CHECK_THROWS_AS(coefficient_convergence_defects(seq, cs, fam), Error);
}

TEST_CASE("S defect improves under refinement with trivial coefficients") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 64}, 512, 0.0});
  CoefficientSequence cs;
  for (const auto& m : seq.members) cs.members.push_back(CoefficientSet::trivial(m));
  cs.limit = CoefficientSet::trivial(seq.limit);
  const auto fam = build_test_family(seq.ambient, {0}, {1.0}, 0);
  const auto rep = resolvent_semigroup_convergence(seq, cs, 1.0, {0.1, 0.5, 1.0}, fam);
  const auto S = rep.series("S");
  CHECK(S[1] < S[0]);
}

TEST_CASE("R defect decreases in alpha") {
  const auto seq = model_sequence({ModelKind::kCircle, {8}, 64, 0.0});
  const auto cs = resolvent_coefficients(
      seq, cosine(1.0), 1.0, 1.0, [](const AmbientSpace&, Index) { return 0.0; }, 0.1);
  const auto fam = build_test_family(seq.ambient, {0, 16, 32}, {0.5, 1.0}, 2);
  double prev = 1e300;
  for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double r = resolvent_semigroup_convergence(seq, cs, alpha, {0.5}, fam).series("R")[0];
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("coefficient defects decrease along resolvent coefficients") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16, 32, 64}, 256, 0.0});
  const auto cs = resolvent_coefficients(
      seq, cosine(1.0), 1.0, 1.0, [](const AmbientSpace&, Index) { return 0.0; }, 0.1,
      cosine(2.0));
  const auto fam = build_test_family(seq.ambient, {0, 64, 128, 192}, {0.5, 1.0, 2.0}, 4);
  const auto rep = coefficient_convergence_defects(seq, cs, fam);
  for (const auto& name : {"b1_weak", "b2_weak", "div1_weak", "div2_weak", "A", "c_weak"}) {
    const auto s = rep.series(name);
    REQUIRE(s.size() == 4);
    CHECK(s[3] < s[0]);
  }
  const auto mono = rep.monotonicity();
  CHECK(mono.at("b1_weak"));
  CHECK(mono.at("div1_weak"));
}

TEST_CASE("coefficient defect is linear in a drift perturbation") {
  const auto s = model_space(ModelKind::kCircle, 16);
  CoefficientSet base = CoefficientSet::trivial(s);
  Gen g(2);
  base.theta1 = EdgeField::antisymmetric(g.field(16, -0.5, 0.5));
  base.c = divergence(s, base.theta1).cwiseMax(0.0);
  const std::vector<Index> ns = {8, 16, 32, 64};
  SpaceSequence seq{s.ambient(), std::vector<DiscreteSpace>(ns.size(), s), s};
  CoefficientSequence cs;
  cs.limit = base;
  for (Index n : ns) {
    CoefficientSet c = base;
    c.theta1.values *= 1.0 + 1.0 / static_cast<double>(n);
    cs.members.push_back(c);
  }
  const auto fam = build_test_family(seq.ambient, {0, 8}, {0.5, 1.0}, 2);
  const auto w = coefficient_convergence_defects(seq, cs, fam).series("b1_weak");
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    CHECK(w[i] / w[i + 1] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("finite dimensional functional") {
  const Mat L = two_state();
  const Vec f = v2(1, 0);
  const Vec P = fdd_functional(L, {1.0, 2.0}, {f, f});
  const double e = std::exp(-1.0);
  CHECK(P[0] == doctest::Approx(0.25 * (1 + e) * (1 + e)).epsilon(1e-13));
  CHECK(P[1] == doctest::Approx(0.25 * (1 - e) * (1 + e)).epsilon(1e-13));

  const Vec P1 = fdd_functional(L, {0.7}, {Vec::Ones(2)});
  CHECK((P1.array() - 1.0).abs().maxCoeff() <= 1e-13);
  CHECK((fdd_functional(L, {0.7}, {f}) - evolve(L, f, 0.7)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(fdd_functional(L, {1.0, 0.5}, {f, f}), Error);
}

TEST_CASE("finite dimensional functional is multilinear and bounded") {
  Gen g(41);
  CoefficientOptions o;
  o.markov = true;
  const auto s = model_space(ModelKind::kInterval, 9);
  const auto gen = generators(assemble(s, dlab::testing::random_coefficients(g, s, o)));
  const std::vector<double> times = {0.2, 0.5, 1.1};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec> fs = {g.field(9), g.field(9), g.field(9)};
    const Vec base = fdd_functional(gen.L, times, fs);
    double bound = 1.0;
    for (const auto& f : fs) bound *= f.cwiseAbs().maxCoeff();
    CHECK(base.cwiseAbs().maxCoeff() <= bound * (1 + 1e-12));

    const Index slot = g.index(3);
    const Vec h = g.field(9);
    const double al = g.uniform(-2, 2), be = g.uniform(-2, 2);
    auto mixed = fs, only_h = fs;
    mixed[slot] = al * fs[slot] + be * h;
    only_h[slot] = h;
    const Vec lhs = fdd_functional(gen.L, times, mixed);
    const Vec rhs = al * base + be * fdd_functional(gen.L, times, only_h);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("fdd defect vanishes for unit functions") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16}, 64, 0.0});
  CoefficientSequence cs;
  for (const auto& m : seq.members) cs.members.push_back(CoefficientSet::trivial(m));
  cs.limit = CoefficientSet::trivial(seq.limit);
  const AmbientFunction one = [](const AmbientSpace&, Index) { return 1.0; };
  for (double d : fdd_convergence_defect(seq, cs, {0.3, 0.9}, {one, one})) CHECK(d <= 1e-12);
}

TEST_CASE("fdd defect improves with resolvent coefficients") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 64}, 256, 0.0});
  const auto cs = resolvent_coefficients(
      seq, cosine(1.0), 1.0, 1.0, [](const AmbientSpace&, Index) { return 0.0; }, 0.1);
  const auto d = fdd_convergence_defect(seq, cs, {0.5, 1.0}, {cosine(1.0), cosine(1.0)});
  CHECK(d[1] < d[0]);
}

TEST_CASE("report helpers") {
  ConvergenceReport rep;
  rep.add(1, "x", 0.5);
  rep.add(0, "x", 1.0);
  rep.add(0, "y", 0.1);
  rep.add(1, "y", 0.2);
  CHECK(rep.series("x") == std::vector<double>{1.0, 0.5});
  CHECK(rep.monotonicity().at("x"));
  CHECK_FALSE(rep.monotonicity().at("y"));
  CHECK(rep.non_monotone() == std::vector<std::string>{"y"});
}
