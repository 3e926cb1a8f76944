#pragma once

// Convergence machinery across a SpaceSequence: coefficient defects, the
// resolvent (R) and semigroup (S) strong-convergence defects, the nested
// semigroup functional P_k behind finite-dimensional distributions, and the
// McShane extension used to compare functions living on different spaces.

#include <map>
#include <string>
#include <vector>

#include "dlab/calculus.hpp"
#include "dlab/common.hpp"
#include "dlab/dirichlet_form.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

struct CoefficientSequence {
  std::vector<CoefficientSet> members;
  CoefficientSet limit;

  void check_alignment(const SpaceSequence& seq) const;
  /// sup over members and limit of each bound.
  Bounds uniform_bounds(const SpaceSequence& seq) const;
};

struct DefectRecord {
  Index member = 0;
  std::string check;
  double defect = 0.0;
};

struct ConvergenceReport {
  std::vector<DefectRecord> records;

  void add(Index member, const std::string& check, double defect);
  std::vector<std::string> checks() const;
  /// Defects for one check ordered by member index.
  std::vector<double> series(const std::string& check) const;
  /// Per check: true when the series is non-increasing.
  std::map<std::string, bool> monotonicity() const;
  /// Checks whose series increases somewhere.
  std::vector<std::string> non_monotone() const;
};

/// max over sample pairs of |F(a) - F(b)| / d(a,b)^beta.
double holder_quotient(const AmbientSpace& ambient, const std::vector<Index>& points,
                       const Vec& values, double beta = 1.0);

/// F~(x) = (sup_a {F(a) - H d(a,x)^beta} min sup F) max inf F.
/// Throws if H is below the sample's Holder quotient, naming the pair.
Vec mcshane_extend(const AmbientSpace& ambient, const std::vector<Index>& sample_points,
                   const Vec& values, double H, double beta, const std::vector<Index>& query);

/// Extend a vertex field of `from` onto the vertices of `to`, with H set to
/// the field's measured Lipschitz quotient (beta = 1).
Vec transport(const DiscreteSpace& from, const VertexField& f, const DiscreteSpace& to);

ConvergenceReport coefficient_convergence_defects(const SpaceSequence& seq,
                                                  const CoefficientSequence& coeffs,
                                                  const TestFamily& tests);

/// Check names: "R" (resolvent) and "S" (sup over t_grid of the semigroup
/// defect), each maxed over the test functions.
ConvergenceReport resolvent_semigroup_convergence(const SpaceSequence& seq,
                                                  const CoefficientSequence& coeffs,
                                                  double alpha, const std::vector<double>& t_grid,
                                                  const TestFamily& tests);

/// P_k = T_{t1}(f1 T_{t2-t1}(f2 ... T_{tk-t(k-1)} fk)).
VertexField fdd_functional(const Mat& L, const std::vector<double>& times,
                           const std::vector<VertexField>& fs);
VertexField fdd_functional(const DiscreteSpace& space, const CoefficientSet& coeffs,
                           const std::vector<double>& times,
                           const std::vector<AmbientFunction>& fs);

/// Per member |P~_k^n(limit basepoint) - P_k^limit(limit basepoint)|.
std::vector<double> fdd_convergence_defect(const SpaceSequence& seq,
                                           const CoefficientSequence& coeffs,
                                           const std::vector<double>& times,
                                           const std::vector<AmbientFunction>& fs);

}  // namespace dlab
