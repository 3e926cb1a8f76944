#pragma once

// Discrete first-order calculus on a weighted graph: carre du champ, Cheeger
// energy, derivations as antisymmetric edge fields, and their divergence.
//
// With w the conductance and m the vertex measure,
//   Gamma_a(f,g)(x) = 1/(2 m(x)) sum_y w(x,y) a(x,y) (f(y)-f(x)) (g(y)-g(x)),
//   b(f)(x)         = 1/(2 m(x)) sum_y w(x,y) theta(x,y) (f(y)-f(x)),
//   div b(x)        = 1/m(x)     sum_y w(x,y) theta(x,y).
// Integration by parts sum_x b(f) m = -sum_x f div b m holds exactly.

#include "dlab/common.hpp"
#include "dlab/mm_space.hpp"

namespace dlab {

/// Per-edge field. Antisymmetric fields are stored on the canonical
/// orientation u -> v of each edge, so theta(v,u) = -theta(u,v) exactly.
struct EdgeField {
  Vec values;
  bool symmetric = false;

  static EdgeField antisymmetric(Vec v) { return {std::move(v), false}; }
  static EdgeField symmetric_field(Vec v) { return {std::move(v), true}; }
  static EdgeField zeros(const DiscreteSpace& s, bool sym = false) {
    return {Vec::Zero(static_cast<Eigen::Index>(s.edge_count())), sym};
  }
  static EdgeField ones(const DiscreteSpace& s) {
    return {Vec::Ones(static_cast<Eigen::Index>(s.edge_count())), true};
  }

  /// Value seen from the owning vertex of an incidence.
  double at(const Incidence& inc) const {
    const double v = values[static_cast<Eigen::Index>(inc.edge)];
    return symmetric ? v : inc.sign * v;
  }
};

/// Coefficients of the non-symmetric form: symmetric diffusion multiplier a
/// with floor lambda, two derivations theta1/theta2 and a killing field c.
struct CoefficientSet {
  EdgeField a;
  double lambda = 1.0;
  EdgeField theta1;
  EdgeField theta2;
  VertexField c;

  /// a = 1, lambda = 1, theta = 0, c = 0.
  static CoefficientSet trivial(const DiscreteSpace& space);
  /// Throws when field sizes or kinds do not match the space.
  void check_sizes(const DiscreteSpace& space) const;
};

struct CarreDuChamp {
  VertexField pointwise;
  double energy = 0.0;
};

CarreDuChamp carre_du_champ(const DiscreteSpace& space, const VertexField& f,
                            const VertexField& g);
CarreDuChamp carre_du_champ(const DiscreteSpace& space, const VertexField& f,
                            const VertexField& g, const EdgeField& a);

/// Ch(f) = 1/2 sum_x m(x) Gamma(f,f)(x).
double cheeger_energy(const DiscreteSpace& space, const VertexField& f);

/// |grad f| = Gamma(f,f)^{1/2}.
VertexField gradient_norm(const DiscreteSpace& space, const VertexField& f);

struct DerivationAction {
  VertexField bf;
  VertexField norm;
};

DerivationAction apply_derivation(const DiscreteSpace& space, const EdgeField& theta,
                                  const VertexField& f);

/// Pointwise |b|(x) = sqrt(1/(2m(x)) sum_y w theta^2).
VertexField derivation_norm(const DiscreteSpace& space, const EdgeField& theta);

VertexField divergence(const DiscreteSpace& space, const EdgeField& theta);

/// theta_f(x,y) = f(y) - f(x); acts on g as Gamma(f, g).
EdgeField gradient_derivation(const DiscreteSpace& space, const VertexField& f);

/// max_x |b(fg) - b(f) g - f b(g)|. Nonzero on graphs at O(mesh).
double leibniz_defect(const DiscreteSpace& space, const EdgeField& theta, const VertexField& f,
                      const VertexField& g);

/// Laplacian with sum_x g Delta f m = -sum_x Gamma(f,g) m, i.e. the
/// divergence of the gradient derivation. Its eigenvalues are those of the
/// Cheeger spectrum.
Mat laplacian_matrix(const DiscreteSpace& space);

}  // namespace dlab
