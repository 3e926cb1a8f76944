#include "dlab/convergence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "dlab/semigroup.hpp"

namespace dlab {

void CoefficientSequence::check_alignment(const SpaceSequence& seq) const {
  require(members.size() == seq.members.size(),
          "coefficient sequence has " + std::to_string(members.size()) + " members, space "
              "sequence has " + std::to_string(seq.members.size()));
  for (Index i = 0; i < members.size(); ++i) members[i].check_sizes(seq.members[i]);
  limit.check_sizes(seq.limit);
}

Bounds CoefficientSequence::uniform_bounds(const SpaceSequence& seq) const {
  check_alignment(seq);
  Bounds out;
  auto merge = [&out](const Bounds& b) {
    out.a_sup = std::max(out.a_sup, b.a_sup);
    out.b1_sup = std::max(out.b1_sup, b.b1_sup);
    out.b2_sup = std::max(out.b2_sup, b.b2_sup);
    out.div_b1_sup = std::max(out.div_b1_sup, b.div_b1_sup);
    out.div_b2_sup = std::max(out.div_b2_sup, b.div_b2_sup);
    out.c_sup = std::max(out.c_sup, b.c_sup);
    out.b_diff_sup = std::max(out.b_diff_sup, b.b_diff_sup);
  };
  for (Index i = 0; i < members.size(); ++i) {
    merge(check_assumptions(seq.members[i], members[i]).bounds);
  }
  merge(check_assumptions(seq.limit, limit).bounds);
  return out;
}

void ConvergenceReport::add(Index member, const std::string& check, double defect) {
  records.push_back({member, check, defect});
}

std::vector<std::string> ConvergenceReport::checks() const {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (std::find(out.begin(), out.end(), r.check) == out.end()) out.push_back(r.check);
  }
  return out;
}

std::vector<double> ConvergenceReport::series(const std::string& check) const {
  std::vector<std::pair<Index, double>> v;
  for (const auto& r : records) {
    if (r.check == check) v.emplace_back(r.member, r.defect);
  }
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (const auto& [_, d] : v) out.push_back(d);
  return out;
}

std::map<std::string, bool> ConvergenceReport::monotonicity() const {
  std::map<std::string, bool> out;
  for (const auto& c : checks()) {
    const auto s = series(c);
    bool mono = true;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i] > s[i - 1]) mono = false;
    }
    out[c] = mono;
  }
  return out;
}

std::vector<std::string> ConvergenceReport::non_monotone() const {
  std::vector<std::string> out;
  for (const auto& [c, mono] : monotonicity()) {
    if (!mono) out.push_back(c);
  }
  return out;
}

double holder_quotient(const AmbientSpace& ambient, const std::vector<Index>& points,
                       const Vec& values, double beta) {
  require(static_cast<Index>(values.size()) == points.size(), "one value per sample point");
  double q = 0.0;
  for (Index i = 0; i < points.size(); ++i) {
    for (Index j = i + 1; j < points.size(); ++j) {
      const double d = ambient.distance(points[i], points[j]);
      if (d > 0.0) q = std::max(q, std::abs(values[i] - values[j]) / std::pow(d, beta));
    }
  }
  return q;
}

Vec mcshane_extend(const AmbientSpace& ambient, const std::vector<Index>& sample_points,
                   const Vec& values, double H, double beta, const std::vector<Index>& query) {
  require(!sample_points.empty(), "McShane extension needs at least one sample");
  require(static_cast<Index>(values.size()) == sample_points.size(),
          "one value per sample point");
  require(beta > 0.0 && beta <= 1.0, "Holder exponent must lie in (0, 1]");
  require(H >= 0.0, "Holder constant must be nonnegative");
  for (Index i = 0; i < sample_points.size(); ++i) {
    for (Index j = i + 1; j < sample_points.size(); ++j) {
      const double d = ambient.distance(sample_points[i], sample_points[j]);
      const double diff = std::abs(values[i] - values[j]);
      if (diff > H * std::pow(d, beta) * (1.0 + 1e-12) + 1e-300) {
        std::ostringstream os;
        os << "Holder constant " << H << " too small for samples at ambient points "
           << sample_points[i] << " and " << sample_points[j] << " (quotient "
           << (d > 0.0 ? diff / std::pow(d, beta) : std::numeric_limits<double>::infinity())
           << ")";
        throw Error(os.str());
      }
    }
  }
  const double hi = values.maxCoeff();
  const double lo = values.minCoeff();
  Vec out(query.size());
  for (Index q = 0; q < query.size(); ++q) {
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < sample_points.size(); ++i) {
      const double d = ambient.distance(sample_points[i], query[q]);
      best = std::max(best, values[i] - H * std::pow(d, beta));
    }
    out[q] = std::max(std::min(best, hi), lo);
  }
  return out;
}

namespace {

Mat pairwise(const AmbientSpace& a, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Mat d(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (Index j = 0; j < cols.size(); ++j) {
    for (Index i = 0; i < rows.size(); ++i) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.distance(rows[i], cols[j]);
    }
  }
  return d;
}

// Lipschitz quotient of v over a symmetric sample distance table.
double lipschitz_from(const Mat& D, const Vec& v) {
  double q = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    for (Eigen::Index i = j + 1; i < v.size(); ++i) {
      const double d = D(i, j);
      if (d > 0.0) q = std::max(q, std::abs(v[i] - v[j]) / d);
    }
  }
  return q;
}

// McShane extension with beta = 1; Dqs holds query-to-sample distances.
Vec extend_from(const Mat& Dqs, const Vec& v, double H) {
  const double hi = v.maxCoeff();
  const double lo = v.minCoeff();
  Vec out(Dqs.rows());
  for (Eigen::Index q = 0; q < Dqs.rows(); ++q) {
    out[q] = std::clamp((v.transpose().array() - H * Dqs.row(q).array()).maxCoeff(), lo, hi);
  }
  return out;
}

}  // namespace

Vec transport(const DiscreteSpace& from, const VertexField& f, const DiscreteSpace& to) {
  require(from.ambient() == to.ambient(), "transport requires a shared ambient space");
  require(static_cast<Index>(f.size()) == from.size(), "field length must match the source space");
  const AmbientSpace& a = *from.ambient();
  const double H = lipschitz_from(pairwise(a, from.embed(), from.embed()), f);
  return extend_from(pairwise(a, to.embed(), from.embed()), f, H);
}

namespace {

// Clamped identity and clamped square, for convergence in measure.
double phi_identity(double v) { return std::clamp(v, -1.0, 1.0); }
double phi_square(double v) { return std::min(v * v, 1.0); }

struct WeakNorm {
  double weak = 0.0;
  double norm_gap = 0.0;
};

WeakNorm weak_and_norm(const DiscreteSpace& s, const Vec& u, const DiscreteSpace& lim,
                       const Vec& u_lim, const std::vector<Vec>& tests_s,
                       const std::vector<Vec>& tests_lim) {
  WeakNorm r;
  for (std::size_t i = 0; i < tests_s.size(); ++i) {
    r.weak = std::max(r.weak, std::abs(inner_m(tests_s[i], u, s.measure()) -
                                       inner_m(tests_lim[i], u_lim, lim.measure())));
  }
  r.norm_gap = std::abs(inner_m(u, u, s.measure()) - inner_m(u_lim, u_lim, lim.measure()));
  return r;
}

}  // namespace

ConvergenceReport coefficient_convergence_defects(const SpaceSequence& seq,
                                                  const CoefficientSequence& coeffs,
                                                  const TestFamily& tests) {
  coeffs.check_alignment(seq);
  require(tests.size() > 0, "test family must be non-empty");
  const auto& lim = seq.limit;
  const auto& cl = coeffs.limit;
  std::vector<Vec> t_lim;
  for (Index i = 0; i < tests.size(); ++i) t_lim.push_back(tests.on(lim, i));

  const std::array<const EdgeField*, 2> th_lim = {&cl.theta1, &cl.theta2};
  std::array<Vec, 2> div_lim = {divergence(lim, cl.theta1), divergence(lim, cl.theta2)};
  std::array<std::vector<Vec>, 2> bf_lim;
  for (int k = 0; k < 2; ++k) {
    for (const auto& f : t_lim) bf_lim[k].push_back(apply_derivation(lim, *th_lim[k], f).bf);
  }

  ConvergenceReport rep;
  for (Index n = 0; n < seq.members.size(); ++n) {
    const auto& s = seq.members[n];
    const auto& cs = coeffs.members[n];
    std::vector<Vec> t_s;
    for (Index i = 0; i < tests.size(); ++i) t_s.push_back(tests.on(s, i));
    const std::array<const EdgeField*, 2> th = {&cs.theta1, &cs.theta2};

    for (int k = 0; k < 2; ++k) {
      const std::string tag = "b" + std::to_string(k + 1);
      double weak = 0.0, gap = 0.0;
      for (Index i = 0; i < tests.size(); ++i) {
        const Vec bf = apply_derivation(s, *th[k], t_s[i]).bf;
        const WeakNorm wn = weak_and_norm(s, bf, lim, bf_lim[k][i], t_s, t_lim);
        weak = std::max(weak, wn.weak);
        gap = std::max(gap, wn.norm_gap);
      }
      rep.add(n, tag + "_weak", weak);
      rep.add(n, tag + "_norm_gap", gap);

      const Vec div = divergence(s, *th[k]);
      const WeakNorm wd = weak_and_norm(s, div, lim, div_lim[k], t_s, t_lim);
      rep.add(n, "div" + std::to_string(k + 1) + "_weak", wd.weak);
      rep.add(n, "div" + std::to_string(k + 1) + "_norm_gap", wd.norm_gap);
    }

    double a_def = 0.0;
    for (Index i = 0; i < tests.size(); ++i) {
      for (Index j = i; j < tests.size(); ++j) {
        // int <A grad u, grad v> dm = 2 Ch_A(u, v)
        const double en = 2.0 * carre_du_champ(s, t_s[i], t_s[j], cs.a).energy;
        const double el = 2.0 * carre_du_champ(lim, t_lim[i], t_lim[j], cl.a).energy;
        a_def = std::max(a_def, std::abs(en - el));
      }
    }
    rep.add(n, "A", a_def);

    const WeakNorm wc = weak_and_norm(s, cs.c, lim, cl.c, t_s, t_lim);
    rep.add(n, "c_weak", wc.weak);
    rep.add(n, "c_norm_gap", wc.norm_gap);
    double meas = 0.0;
    for (auto phi : {phi_identity, phi_square}) {
      const Vec pc = cs.c.unaryExpr(phi);
      const Vec pl = cl.c.unaryExpr(phi);
      for (Index i = 0; i < tests.size(); ++i) {
        meas = std::max(meas, std::abs(inner_m(t_s[i], pc, s.measure()) -
                                       inner_m(t_lim[i], pl, lim.measure())));
      }
    }
    rep.add(n, "c_measure", meas);
  }
  return rep;
}

ConvergenceReport resolvent_semigroup_convergence(const SpaceSequence& seq,
                                                  const CoefficientSequence& coeffs,
                                                  double alpha, const std::vector<double>& t_grid,
                                                  const TestFamily& tests) {
  require(alpha > 0.0, "resolvent parameter alpha must be positive");
  require(!t_grid.empty(), "time grid must be non-empty");
  for (double t : t_grid) require(t >= 0.0, "time grid entries must be nonnegative");
  coeffs.check_alignment(seq);

  auto evaluator = [](const DiscreteSpace& s, const CoefficientSet& c) {
    const GeneratorPair g = generators(assemble(s, c));
    const auto method = SemigroupEvaluator::is_self_adjoint(g.L, g.m, 1e-12)
                            ? SemigroupMethod::kSpectral
                            : SemigroupMethod::kDenseExponential;
    return SemigroupEvaluator(g.L, g.m, method);
  };

  const auto& lim = seq.limit;
  const SemigroupEvaluator sg_lim = evaluator(lim, coeffs.limit);
  std::vector<double> grid = t_grid;
  std::sort(grid.begin(), grid.end());
  const Mat G_lim = sg_lim.resolvent_matrix(alpha);

  // Limit-side images and their Lipschitz constants do not depend on the member.
  const Mat D_lim = pairwise(*seq.ambient, lim.embed(), lim.embed());
  Mat F_lim(static_cast<Eigen::Index>(lim.size()), static_cast<Eigen::Index>(tests.size()));
  for (Index i = 0; i < tests.size(); ++i) F_lim.col(static_cast<Eigen::Index>(i)) = tests.on(lim, i);
  const Mat GF_lim = G_lim * F_lim;
  const std::vector<Mat> TF_lim = sg_lim.evolve_block(F_lim, grid);
  std::vector<double> g_lip(tests.size());
  std::vector<std::vector<double>> t_lip(tests.size());
  for (Index i = 0; i < tests.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    g_lip[i] = lipschitz_from(D_lim, GF_lim.col(c));
    for (const Mat& TF : TF_lim) t_lip[i].push_back(lipschitz_from(D_lim, TF.col(c)));
  }

  ConvergenceReport rep;
  for (Index n = 0; n < seq.members.size(); ++n) {
    const auto& s = seq.members[n];
    const SemigroupEvaluator sg = evaluator(s, coeffs.members[n]);
    Mat F(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(tests.size()));
    for (Index i = 0; i < tests.size(); ++i) F.col(static_cast<Eigen::Index>(i)) = tests.on(s, i);
    const Mat GF = sg.resolvent_matrix(alpha) * F;
    const std::vector<Mat> TF = sg.evolve_block(F, grid);
    const Mat D = pairwise(*seq.ambient, s.embed(), lim.embed());

    auto l2 = [&s](const Vec& u) { return std::sqrt(inner_m(u, u, s.measure())); };
    double r_def = 0.0, s_def = 0.0;
    for (Index i = 0; i < tests.size(); ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      r_def = std::max(r_def, l2(GF.col(c) - extend_from(D, GF_lim.col(c), g_lip[i])));
      for (std::size_t k = 0; k < grid.size(); ++k) {
        s_def = std::max(s_def, l2(TF[k].col(c) - extend_from(D, TF_lim[k].col(c), t_lip[i][k])));
      }
    }
    rep.add(n, "R", r_def);
    rep.add(n, "S", s_def);
  }
  return rep;
}

VertexField fdd_functional(const Mat& L, const std::vector<double>& times,
                           const std::vector<VertexField>& fs) {
  require(!times.empty(), "at least one time is required");
  require(times.size() == fs.size(), "one function per time is required");
  require(times.front() > 0.0, "times must be positive");
  for (std::size_t i = 1; i < times.size(); ++i) {
    require(times[i] > times[i - 1], "times must be strictly increasing");
  }
  for (const auto& f : fs) require(f.size() == L.rows(), "function length mismatch");
  VertexField u = fs.back();
  for (std::size_t i = times.size() - 1; i-- > 0;) {
    u = fs[i].cwiseProduct(evolve(L, u, times[i + 1] - times[i]));
  }
  return evolve(L, u, times.front());
}

VertexField fdd_functional(const DiscreteSpace& space, const CoefficientSet& coeffs,
                           const std::vector<double>& times,
                           const std::vector<AmbientFunction>& fs) {
  std::vector<VertexField> fv;
  for (const auto& f : fs) fv.push_back(space.restrict(f));
  return fdd_functional(generators(assemble(space, coeffs)).L, times, fv);
}

std::vector<double> fdd_convergence_defect(const SpaceSequence& seq,
                                           const CoefficientSequence& coeffs,
                                           const std::vector<double>& times,
                                           const std::vector<AmbientFunction>& fs) {
  coeffs.check_alignment(seq);
  const auto& lim = seq.limit;
  const VertexField p_lim = fdd_functional(lim, coeffs.limit, times, fs);
  const Index base = lim.embed()[lim.basepoint()];
  const double target = p_lim[static_cast<Eigen::Index>(lim.basepoint())];
  std::vector<double> out;
  for (Index n = 0; n < seq.members.size(); ++n) {
    const auto& s = seq.members[n];
    const VertexField p = fdd_functional(s, coeffs.members[n], times, fs);
    const double H = holder_quotient(*s.ambient(), s.embed(), p, 1.0);
    const Vec ext = mcshane_extend(*s.ambient(), s.embed(), p, H, 1.0, {base});
    out.push_back(std::abs(ext[0] - target));
  }
  return out;
}

}  // namespace dlab
