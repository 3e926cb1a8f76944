#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <dlab/constructions.hpp>
#include <dlab/mm_space.hpp>

#include "generators.hpp"

using namespace dlab;
using dlab::testing::Gen;

TEST_CASE("ambient from table rejects bad metrics") {
  Mat asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_AS(AmbientSpace::from_table(asym), Error);
  Mat tri(3, 3);
  tri << 0, 1, 5, 1, 0, 1, 5, 1, 0;
  CHECK_THROWS_AS(AmbientSpace::from_table(tri), Error);
  Mat diag(2, 2);
  diag << 1, 1, 1, 0;
  CHECK_THROWS_AS(AmbientSpace::from_table(diag), Error);
}

TEST_CASE("periodic ambient wraps to the nearest image") {
  Mat coords(3, 1);
  coords << 0.0, 0.25, 0.9;
  Vec per(1);
  per << 1.0;
  const auto amb = AmbientSpace::from_periodic(coords, per);
  CHECK(amb.distance(0, 2) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(amb.distance(1, 2) == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(amb.distance(2, 2) == 0.0);
}

TEST_CASE("discrete space rejects non-isometric edges and bad measures") {
  Mat coords(2, 1);
  coords << 0.0, 1.0;
  auto amb = std::make_shared<const AmbientSpace>(AmbientSpace::from_coords(coords));
  CHECK_THROWS_AS(DiscreteSpace(amb, {0, 1}, {{0, 1, 2.0, 1.0}}, Vec::Ones(2), 0), Error);
  Vec bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_AS(DiscreteSpace(amb, {0, 1}, {{0, 1, 1.0, 1.0}}, bad, 0), Error);
  CHECK_THROWS_AS(DiscreteSpace(amb, {0, 0}, {{0, 1, 1.0, 1.0}}, Vec::Ones(2), 0), Error);
}

TEST_CASE("shortest path examples") {
  const auto two = dlab::testing::two_vertex();
  CHECK(shortest_path_metric(two)(0, 1) == 1.0);

  const auto path = dlab::testing::path_graph(3);
  CHECK(shortest_path_metric(path)(0, 2) == 2.0);
}

TEST_CASE("a (1,1,3) triangle is not isometrically embeddable") {
  Mat big(3, 3);
  big << 0, 1, 2, 1, 0, 1, 2, 1, 0;
  auto amb = std::make_shared<const AmbientSpace>(AmbientSpace::from_table(big));
  CHECK_THROWS_AS(DiscreteSpace(amb, {0, 1, 2},
                                {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}, {0, 2, 3.0, 1.0}},
                                Vec::Ones(3), 0),
                  Error);
  const DiscreteSpace tri(amb, {0, 1, 2}, {{0, 1, 1.0, 1.0}, {1, 2, 1.0, 1.0}, {0, 2, 2.0, 1.0}},
                          Vec::Ones(3), 0);
  CHECK(shortest_path_metric(tri)(0, 2) == 2.0);
}

TEST_CASE("shortest path names a stranded vertex") {
  Mat coords(3, 1);
  coords << 0.0, 1.0, 2.0;
  auto amb = std::make_shared<const AmbientSpace>(AmbientSpace::from_coords(coords));
  CHECK_THROWS_AS(DiscreteSpace(amb, {0, 1, 2}, {{0, 1, 1.0, 1.0}}, Vec::Ones(3), 0), Error);
}

TEST_CASE("shortest path metric satisfies the triangle inequality") {
  for (Index n : {5u, 9u, 16u}) {
    const auto s = model_space(ModelKind::kCircle, n);
    const Mat d = shortest_path_metric(s);
    for (Index x = 0; x < n; ++x)
      for (Index y = 0; y < n; ++y)
        for (Index z = 0; z < n; ++z) CHECK(d(x, z) <= d(x, y) + d(y, z));
  }
}

TEST_CASE("ball volume examples") {
  const auto c4 = model_space(ModelKind::kCircle, 4, 1.0);
  CHECK(ball_volume(c4, 0, 0.0).vertices.empty());
  CHECK(ball_volume(c4, 0, 0.0).measure == 0.0);
  const Ball all = ball_volume(c4, 0, 10.0);
  CHECK(all.vertices.size() == 4);
  CHECK(all.measure == doctest::Approx(c4.total_measure()));
  CHECK(ball_volume(c4, 0, 0.3).vertices.size() == 3);
}

TEST_CASE("ball volume is monotone in r") {
  Gen g(3);
  const auto s = model_space(ModelKind::kInterval, 17);
  const Mat d = shortest_path_metric(s);
  for (int trial = 0; trial < 50; ++trial) {
    const Index c = g.index(s.size());
    const double r1 = g.uniform(0, 1.2), r2 = r1 + g.uniform(0, 0.5);
    auto a = ball_volume(s, d, c, r1).vertices;
    auto b = ball_volume(s, d, c, r2).vertices;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST_CASE("test family sizes") {
  const auto seq = model_sequence({ModelKind::kCircle, {8}, 16, 0.0});
  const auto one = build_test_family(seq.ambient, {0}, {1.0}, 0);
  REQUIRE(one.size() == 1);
  CHECK(one.functions[0].sup_bound == 1.0);
  CHECK(one.functions[0].lipschitz == 1.0);
  CHECK(build_test_family(seq.ambient, {0, 3}, {0.5, 1.0}, 0).size() == 4);
  CHECK(build_test_family(seq.ambient, {0, 3}, {1.0}, 1).size() == 3);
  CHECK_THROWS_AS(build_test_family(seq.ambient, {}, {1.0}, 0), Error);
}

TEST_CASE("test functions respect their Lipschitz constants") {
  const auto seq = model_sequence({ModelKind::kCircle, {8}, 24, 0.0});
  const auto fam = build_test_family(seq.ambient, {0, 5, 11}, {0.5, 1.0, 2.0}, 8);
  const auto& amb = *seq.ambient;
  for (const auto& phi : fam.functions)
    for (Index p = 0; p < amb.size(); ++p)
      for (Index q = 0; q < amb.size(); ++q)
        CHECK(std::abs(phi(amb, p) - phi(amb, q)) <=
              phi.lipschitz * amb.distance(p, q) * (1 + 1e-12) + 1e-15);
}

TEST_CASE("cross space defects vanish on the identity sequence") {
  const auto s = model_space(ModelKind::kCircle, 12);
  SpaceSequence seq{s.ambient(), {s, s}, s};
  const auto fam = build_test_family(seq.ambient, {0, 4}, {0.5, 1.0}, 2);
  Gen g(5);
  const Vec f = g.field(s.size());
  for (const auto& d : cross_space_defects(seq, {f, f}, f, fam)) {
    CHECK(d.measure_defect == 0.0);
    CHECK(d.l2_weak_defect == 0.0);
    CHECK(d.l2_norm_gap == 0.0);
    CHECK(d.w12_energy_gap == 0.0);
  }
  const Vec z = Vec::Zero(static_cast<Eigen::Index>(s.size()));
  for (const auto& d : cross_space_defects(seq, {z, z}, z, fam)) {
    CHECK(d.l2_weak_defect == 0.0);
    CHECK(d.l2_norm_gap == 0.0);
  }
  CHECK_THROWS_AS(cross_space_defects(seq, {f, Vec::Zero(3)}, f, fam), Error);
}

TEST_CASE("cross space defects decrease under refinement of sin") {
  const auto seq = model_sequence({ModelKind::kCircle, {8, 16}, 64, 0.0});
  const auto fam = build_test_family(seq.ambient, {0, 16, 32, 48}, {0.5, 1.0, 2.0}, 4);
  auto sin_on = [](const DiscreteSpace& s) {
    return s.restrict([](const AmbientSpace& a, Index p) { return std::sin((*a.coords())(p, 0)); });
  };
  const auto d = cross_space_defects(seq, {sin_on(seq.members[0]), sin_on(seq.members[1])},
                                     sin_on(seq.limit), fam);
  CHECK(d[1].l2_weak_defect < d[0].l2_weak_defect);
  // The uniform rule integrates sin^2 exactly on every member.
  CHECK(std::abs(d[0].l2_norm_gap) <= 1e-12);
  CHECK(std::abs(d[1].l2_norm_gap) <= 1e-12);
  CHECK(std::abs(d[1].w12_energy_gap) < std::abs(d[0].w12_energy_gap));
}

TEST_CASE("sequence validation checks the shared ambient") {
  const auto a = model_space(ModelKind::kCircle, 8);
  const auto b = model_space(ModelKind::kCircle, 8);
  SpaceSequence seq{a.ambient(), {a, b}, a};
  CHECK_THROWS_AS(seq.validate(), Error);
}
