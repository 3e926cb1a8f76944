#include "dlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dlab/dirichlet_form.hpp"
#include "dlab/semigroup.hpp"

namespace dlab {

double erfc(double x) { return std::erfc(x); }

ConservativenessReport conservativeness_criterion(const DiscreteSpace& space,
                                                  const CoefficientSet& coeffs,
                                                  const ConservativenessOptions& options) {
  require(!options.r_grid.empty(), "conservativeness criterion needs a non-empty r grid");
  require(options.T > 0.0, "criterion time T must be positive");
  coeffs.check_sizes(space);
  ConservativenessReport rep;

  const VertexField div1 = divergence(space, coeffs.theta1);
  const VertexField div2 = divergence(space, coeffs.theta2);
  rep.div_mismatch = {(div1 - coeffs.c).cwiseAbs().maxCoeff(),
                      (div2 - coeffs.c).cwiseAbs().maxCoeff()};
  rep.div_matches = {rep.div_mismatch[0] <= 1e-12, rep.div_mismatch[1] <= 1e-12};
  rep.applicable = rep.div_matches[0] && rep.div_matches[1];

  VertexField rho;
  if (options.rho) {
    require(static_cast<Index>(options.rho->size()) == space.size(), "rho length mismatch");
    rho = *options.rho;
  } else {
    rho = shortest_path_metric(space).row(static_cast<Eigen::Index>(space.basepoint()))
              .transpose();
  }
  const VertexField gamma_a = carre_du_champ(space, rho, rho, coeffs.a).pointwise;
  const VertexField grad_rho = gradient_norm(space, rho);
  const VertexField bdiff =
      derivation_norm(space, EdgeField::antisymmetric(coeffs.theta1.values - coeffs.theta2.values));

  auto ball_stats = [&](double radius, double& measure, double& max_gamma, double& max_drift) {
    measure = 0.0;
    max_gamma = 0.0;
    max_drift = 0.0;
    for (Index x = 0; x < space.size(); ++x) {
      if (rho[x] <= radius) {
        measure += space.measure()[x];
        max_gamma = std::max(max_gamma, gamma_a[x]);
        max_drift = std::max(max_drift, bdiff[x] * grad_rho[x]);
      }
    }
  };

  std::vector<double> grid = options.r_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  rep.drift_bound_constant = 0.0;
  for (double r : grid) {
    CriterionRow row;
    row.r = r;
    double drift_unused = 0.0;
    ball_stats(options.R + r, row.ball_measure, row.max_energy, drift_unused);
    row.argument = row.max_energy > 0.0 ? r / std::sqrt(row.max_energy * options.T)
                                        : std::numeric_limits<double>::infinity();
    row.product = row.ball_measure * erfc(row.argument);
    rep.criterion_table.push_back(row);

    double bm = 0.0, bg = 0.0, drift = 0.0;
    ball_stats(r, bm, bg, drift);
    rep.drift_bound_constant = std::max(rep.drift_bound_constant, drift / (1.0 + r));
  }
  rep.drift_bound_ok = std::isfinite(rep.drift_bound_constant);

  const std::size_t half = rep.criterion_table.size() / 2;
  rep.criterion_decreasing = true;
  for (std::size_t i = std::max<std::size_t>(half, 1); i < rep.criterion_table.size(); ++i) {
    if (!(rep.criterion_table[i].product < rep.criterion_table[i - 1].product)) {
      rep.criterion_decreasing = false;
    }
  }

  const GeneratorPair gen = generators(assemble(space, coeffs));
  std::vector<double> times = options.exact_times;
  if (times.empty()) times.push_back(options.T);
  for (double t : times) {
    rep.exact_defect.emplace_back(t, heat_kernel(gen.L, gen.m, t).report.conservative_defect);
  }
  return rep;
}

bool volume_growth_check(const DiscreteSpace& space, double c1, double c2) {
  const Mat metric = shortest_path_metric(space);
  const Vec d = metric.row(static_cast<Eigen::Index>(space.basepoint())).transpose();
  // The open ball's measure jumps just after each distinct distance; the
  // supremum of m(B_r) exp(-c2 r^2) is approached there.
  for (Index i = 0; i < space.size(); ++i) {
    const double r = d[i];
    double closed = 0.0;
    for (Index y = 0; y < space.size(); ++y) {
      if (d[y] <= r) closed += space.measure()[y];
    }
    if (closed > c1 * std::exp(c2 * r * r)) return false;
  }
  return true;
}

double bishop_gromov_constant(const DiscreteSpace& space, const Mat& metric, double nu) {
  const auto n = static_cast<Eigen::Index>(space.size());
  require(metric.rows() == n && metric.cols() == n, "metric table size mismatch");
  const double diam = metric.maxCoeff();
  if (!(diam > 0.0)) return std::numeric_limits<double>::infinity();
  double c = std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < n; ++x) {
    std::vector<double> radii;
    for (Eigen::Index y = 0; y < n; ++y) {
      if (metric(x, y) > 0.0) radii.push_back(metric(x, y));
    }
    radii.push_back(diam);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    // On (r_{i-1}, r_i] the open ball is fixed, so the ratio is smallest at r_i.
    for (double r : radii) {
      double open = 0.0;
      for (Eigen::Index y = 0; y < n; ++y) {
        if (metric(x, y) < r) open += space.measure()[y];
      }
      c = std::min(c, open / std::pow(r, 2.0 * nu));
    }
  }
  return c;
}

double bishop_gromov_constant(const DiscreteSpace& space, double nu) {
  return bishop_gromov_constant(space, shortest_path_metric(space), nu);
}

}  // namespace dlab
