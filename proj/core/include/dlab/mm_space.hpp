#pragma once

// Finite pointed metric measure spaces sharing a common ambient metric space,
// plus the cross-space defect computations used to quantify convergence of a
// sequence of such spaces.

#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "dlab/common.hpp"

namespace dlab {

/// Finite point cloud with a metric. The metric is either Euclidean on the
/// stored coordinates or an explicit distance table; coordinates may be kept
/// alongside a table purely as labels for ambient functions.
class AmbientSpace {
 public:
  /// Rows of `coords` are points; distance is Euclidean.
  static AmbientSpace from_coords(Mat coords);
  /// Validates symmetry, zero diagonal, nonnegativity and the triangle
  /// inequality (relative tolerance 1e-12).
  static AmbientSpace from_table(Mat table, std::optional<Mat> coords = std::nullopt);
  /// Euclidean distance on coordinate differences wrapped to the nearest
  /// image; a zero period leaves that axis unwrapped. Flat circles and tori.
  static AmbientSpace from_periodic(Mat coords, Vec periods);

  Index size() const { return size_; }
  double distance(Index p, Index q) const;
  bool has_table() const { return table_.has_value(); }
  const std::optional<Mat>& coords() const { return coords_; }
  const std::optional<Mat>& table() const { return table_; }
  const std::optional<Vec>& periods() const { return periods_; }

 private:
  AmbientSpace() = default;
  Index size_ = 0;
  std::optional<Mat> coords_;
  std::optional<Mat> table_;
  std::optional<Vec> periods_;
};

using AmbientPtr = std::shared_ptr<const AmbientSpace>;

/// Function on ambient points, addressed by point index.
using AmbientFunction = std::function<double(const AmbientSpace&, Index)>;

struct Edge {
  Index u = 0;
  Index v = 0;
  double length = 1.0;
  double conductance = 1.0;
};

/// Neighbor entry of the adjacency list. `sign` is +1 when the owning vertex
/// is the edge's canonical tail `u`, -1 otherwise.
struct Incidence {
  Index neighbor;
  Index edge;
  double sign;
};

/// Weighted graph (X, d, m, basepoint) embedded isometrically (on edges) into
/// an ambient space.
class DiscreteSpace {
 public:
  static constexpr double kIsometryTolerance = 1e-9;

  DiscreteSpace(AmbientPtr ambient, std::vector<Index> embed, std::vector<Edge> edges,
                Vec measure, Index basepoint);

  Index size() const { return embed_.size(); }
  Index edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vec& measure() const { return measure_; }
  const std::vector<Index>& embed() const { return embed_; }
  Index basepoint() const { return basepoint_; }
  const AmbientPtr& ambient() const { return ambient_; }
  const std::vector<Incidence>& incident(Index x) const { return adjacency_[x]; }
  double total_measure() const { return measure_.sum(); }

  /// Evaluate an ambient function at every vertex.
  VertexField restrict(const AmbientFunction& f) const;

 private:
  AmbientPtr ambient_;
  std::vector<Index> embed_;
  std::vector<Edge> edges_;
  Vec measure_;
  Index basepoint_;
  std::vector<std::vector<Incidence>> adjacency_;
};

/// Ordered family of spaces in one ambient space with a designated limit.
struct SpaceSequence {
  AmbientPtr ambient;
  std::vector<DiscreteSpace> members;
  DiscreteSpace limit;

  /// Checks the shared-ambient invariant and, unless disabled, that basepoint
  /// distances to the limit basepoint are non-increasing and end below 1e-6.
  void validate(bool require_monotone_basepoints = true) const;
};

/// min{d(., center), level}, or a product of such factors.
struct TestFunction {
  std::vector<std::pair<Index, double>> factors;  // (center point, level)
  double lipschitz = 0.0;
  double sup_bound = 0.0;

  double operator()(const AmbientSpace& ambient, Index point) const;
};

struct TestFamily {
  AmbientPtr ambient;
  std::vector<TestFunction> functions;

  Index size() const { return functions.size(); }
  VertexField on(const DiscreteSpace& space, Index i) const;
};

/// All-pairs shortest path distances along edges, weighted by edge length.
Mat shortest_path_metric(const DiscreteSpace& space);

struct Ball {
  std::vector<Index> vertices;
  double measure = 0.0;
};

/// Open ball {x : d(center, x) < r} under the graph metric.
Ball ball_volume(const DiscreteSpace& space, Index center, double r);
/// Same, reusing a precomputed metric table.
Ball ball_volume(const DiscreteSpace& space, const Mat& metric, Index center, double r);

/// Generators min{d(., x), k} for every (center, level) plus up to
/// `max_products` pairwise products of distinct generators.
TestFamily build_test_family(AmbientPtr ambient, const std::vector<Index>& centers,
                             const std::vector<double>& levels, Index max_products);

struct CrossSpaceDefect {
  double measure_defect = 0.0;
  double l2_weak_defect = 0.0;
  double l2_norm_gap = 0.0;     // signed
  double w12_energy_gap = 0.0;  // signed
};

std::vector<CrossSpaceDefect> cross_space_defects(const SpaceSequence& seq,
                                                  const std::vector<VertexField>& f_members,
                                                  const VertexField& f_limit,
                                                  const TestFamily& tests);

}  // namespace dlab
