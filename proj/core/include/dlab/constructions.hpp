#pragma once

// Model space sequences (circle, interval, flat torus) refining toward a fine
// limit member, and coefficient factories built from resolvents and
// eigenfunctions of the Cheeger Laplacian.

#include <optional>
#include <string>
#include <vector>

#include "dlab/common.hpp"
#include "dlab/convergence.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

enum class ModelKind { kCircle, kInterval, kTorus };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelFamily {
  ModelKind kind = ModelKind::kCircle;
  std::vector<Index> sizes;
  Index limit_size = 0;
  /// Circumference, interval length or torus side. 0 picks the default
  /// (2 pi for the circle, 1 otherwise).
  double length = 0.0;

  double effective_length() const;
};

/// One member on its own ambient space.
DiscreteSpace model_space(ModelKind kind, Index n, double length = 0.0);

/// Members and limit embedded in the union of their vertex positions.
/// Circle: m = h, w = 1/h, edge length h = L/n.
/// Interval: h = L/(n-1), m = h with half mass at both ends, w = 1/h.
/// Torus: n x n grid, h = L/n, m = h^2, w = 1.
SpaceSequence model_sequence(const ModelFamily& family);

/// f_n = (lam - Delta_n)^{-1} g_n, theta_i the gradient derivation of f_n
/// (f_n built from g2 for theta2 when given), a = h + a0 averaged on edges,
/// lambda = a0, c = max(div b1, div b2) + slack.
CoefficientSequence resolvent_coefficients(const SpaceSequence& seq, const AmbientFunction& g,
                                           double lam, double a0,
                                           const AmbientFunction& h, double slack,
                                           const std::optional<AmbientFunction>& g2 = std::nullopt);

/// theta1 from the k-th Cheeger eigenfunction, theta2 from the k2-th,
/// m-normalized and sign aligned with the limit member; a = 1, lambda = 1.
CoefficientSequence eigen_coefficients(const SpaceSequence& seq, Index k, Index k2,
                                       double slack);

}  // namespace dlab
