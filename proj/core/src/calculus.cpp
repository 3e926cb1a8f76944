#include "dlab/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace dlab {
namespace {

void check_field(const DiscreteSpace& space, const VertexField& f, const char* name) {
  require(static_cast<Index>(f.size()) == space.size(),
          std::string("vertex field '") + name + "' has length " + std::to_string(f.size()) +
              ", expected " + std::to_string(space.size()));
}

void check_edges(const DiscreteSpace& space, const EdgeField& e, const char* name) {
  require(static_cast<Index>(e.values.size()) == space.edge_count(),
          std::string("edge field '") + name + "' has length " +
              std::to_string(e.values.size()) + ", expected " +
              std::to_string(space.edge_count()));
}

CarreDuChamp gamma_impl(const DiscreteSpace& space, const VertexField& f, const VertexField& g,
                        const EdgeField* a) {
  check_field(space, f, "f");
  check_field(space, g, "g");
  if (a) check_edges(space, *a, "a");
  const Index n = space.size();
  CarreDuChamp out{VertexField::Zero(static_cast<Eigen::Index>(n)), 0.0};
  for (Index x = 0; x < n; ++x) {
    double acc = 0.0;
    for (const auto& inc : space.incident(x)) {
      const double w = space.edges()[inc.edge].conductance;
      const double coef = a ? a->at(inc) : 1.0;
      acc += w * coef * (f[inc.neighbor] - f[x]) * (g[inc.neighbor] - g[x]);
    }
    out.pointwise[x] = acc / (2.0 * space.measure()[x]);
  }
  out.energy = 0.5 * out.pointwise.dot(space.measure());
  return out;
}

}  // namespace

CoefficientSet CoefficientSet::trivial(const DiscreteSpace& space) {
  return {EdgeField::ones(space), 1.0, EdgeField::zeros(space), EdgeField::zeros(space),
          VertexField::Zero(static_cast<Eigen::Index>(space.size()))};
}

void CoefficientSet::check_sizes(const DiscreteSpace& space) const {
  check_edges(space, a, "a");
  check_edges(space, theta1, "theta1");
  check_edges(space, theta2, "theta2");
  check_field(space, c, "c");
  require(a.symmetric, "diffusion multiplier a must be a symmetric edge field");
  require(!theta1.symmetric && !theta2.symmetric, "derivations must be antisymmetric fields");
  require(a.values.allFinite() && theta1.values.allFinite() && theta2.values.allFinite() &&
              c.allFinite(),
          "coefficient fields must be finite");
}

CarreDuChamp carre_du_champ(const DiscreteSpace& space, const VertexField& f,
                            const VertexField& g) {
  return gamma_impl(space, f, g, nullptr);
}

CarreDuChamp carre_du_champ(const DiscreteSpace& space, const VertexField& f,
                            const VertexField& g, const EdgeField& a) {
  require(a.symmetric, "carre du champ multiplier must be symmetric");
  return gamma_impl(space, f, g, &a);
}

double cheeger_energy(const DiscreteSpace& space, const VertexField& f) {
  return carre_du_champ(space, f, f).energy;
}

VertexField gradient_norm(const DiscreteSpace& space, const VertexField& f) {
  return carre_du_champ(space, f, f).pointwise.cwiseMax(0.0).cwiseSqrt();
}

VertexField derivation_norm(const DiscreteSpace& space, const EdgeField& theta) {
  check_edges(space, theta, "theta");
  VertexField out(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (const auto& inc : space.incident(x)) {
      const double t = theta.at(inc);
      acc += space.edges()[inc.edge].conductance * t * t;
    }
    out[x] = std::sqrt(acc / (2.0 * space.measure()[x]));
  }
  return out;
}

DerivationAction apply_derivation(const DiscreteSpace& space, const EdgeField& theta,
                                  const VertexField& f) {
  check_edges(space, theta, "theta");
  check_field(space, f, "f");
  VertexField bf(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (const auto& inc : space.incident(x)) {
      acc += space.edges()[inc.edge].conductance * theta.at(inc) * (f[inc.neighbor] - f[x]);
    }
    bf[x] = acc / (2.0 * space.measure()[x]);
  }
  return {std::move(bf), derivation_norm(space, theta)};
}

VertexField divergence(const DiscreteSpace& space, const EdgeField& theta) {
  check_edges(space, theta, "theta");
  VertexField out(space.size());
  for (Index x = 0; x < space.size(); ++x) {
    double acc = 0.0;
    for (const auto& inc : space.incident(x)) {
      acc += space.edges()[inc.edge].conductance * theta.at(inc);
    }
    out[x] = acc / space.measure()[x];
  }
  return out;
}

EdgeField gradient_derivation(const DiscreteSpace& space, const VertexField& f) {
  check_field(space, f, "f");
  Vec v(space.edge_count());
  for (Index e = 0; e < space.edge_count(); ++e) {
    const auto& ed = space.edges()[e];
    v[e] = f[ed.v] - f[ed.u];
  }
  return EdgeField::antisymmetric(std::move(v));
}

double leibniz_defect(const DiscreteSpace& space, const EdgeField& theta, const VertexField& f,
                      const VertexField& g) {
  const VertexField fg = f.cwiseProduct(g);
  const VertexField bfg = apply_derivation(space, theta, fg).bf;
  const VertexField bf = apply_derivation(space, theta, f).bf;
  const VertexField bg = apply_derivation(space, theta, g).bf;
  return (bfg - bf.cwiseProduct(g) - f.cwiseProduct(bg)).cwiseAbs().maxCoeff();
}

Mat laplacian_matrix(const DiscreteSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.size());
  Mat lap = Mat::Zero(n, n);
  for (const auto& ed : space.edges()) {
    const auto u = static_cast<Eigen::Index>(ed.u);
    const auto v = static_cast<Eigen::Index>(ed.v);
    const double w = ed.conductance;
    lap(u, v) += w / space.measure()[ed.u];
    lap(u, u) -= w / space.measure()[ed.u];
    lap(v, u) += w / space.measure()[ed.v];
    lap(v, v) -= w / space.measure()[ed.v];
  }
  return lap;
}

}  // namespace dlab
