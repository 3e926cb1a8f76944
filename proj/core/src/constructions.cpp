#include "dlab/constructions.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "dlab/calculus.hpp"
#include "dlab/dirichlet_form.hpp"
#include "dlab/semigroup.hpp"

namespace dlab {
namespace {

// Reduced fractions of the period, so coinciding vertices of different
// members land on one ambient point.
using Key = std::array<long long, 4>;

std::pair<long long, long long> reduced(long long num, long long den) {
  const long long g = std::gcd(num, den);
  return {num / g, den / g};
}

struct Layout {
  std::vector<Key> keys;
  std::vector<Edge> edges;
  Vec measure;
};

Layout layout(ModelKind kind, Index n, double L) {
  Layout out;
  const auto nn = static_cast<long long>(n);
  switch (kind) {
    case ModelKind::kCircle: {
      require(n >= 3, "circle members need at least 3 vertices");
      const double h = L / static_cast<double>(n);
      for (long long j = 0; j < nn; ++j) {
        const auto [p, q] = reduced(j, nn);
        out.keys.push_back({p, q, 0, 1});
      }
      for (Index j = 0; j < n; ++j) out.edges.push_back({j, (j + 1) % n, h, 1.0 / h});
      out.measure = Vec::Constant(static_cast<Eigen::Index>(n), h);
      break;
    }
    case ModelKind::kInterval: {
      require(n >= 3, "interval members need at least 3 vertices");
      const double h = L / static_cast<double>(n - 1);
      for (long long j = 0; j < nn; ++j) {
        const auto [p, q] = reduced(j, nn - 1);
        out.keys.push_back({p, q, 0, 1});
      }
      for (Index j = 0; j + 1 < n; ++j) out.edges.push_back({j, j + 1, h, 1.0 / h});
      out.measure = Vec::Constant(static_cast<Eigen::Index>(n), h);
      out.measure[0] = out.measure[static_cast<Eigen::Index>(n - 1)] = 0.5 * h;
      break;
    }
    case ModelKind::kTorus: {
      require(n >= 3, "torus members need at least 3 vertices per side");
      const double h = L / static_cast<double>(n);
      for (long long i = 0; i < nn; ++i) {
        for (long long j = 0; j < nn; ++j) {
          const auto [p, q] = reduced(i, nn);
          const auto [r, s] = reduced(j, nn);
          out.keys.push_back({p, q, r, s});
        }
      }
      auto id = [n](Index i, Index j) { return (i % n) * n + (j % n); };
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          out.edges.push_back({id(i, j), id(i + 1, j), h, 1.0});
          out.edges.push_back({id(i, j), id(i, j + 1), h, 1.0});
        }
      }
      out.measure = Vec::Constant(static_cast<Eigen::Index>(n * n), h * h);
      break;
    }
  }
  return out;
}

AmbientPtr ambient_for(ModelKind kind, const std::vector<Key>& keys, double L) {
  const bool two_d = kind == ModelKind::kTorus;
  Mat coords(static_cast<Eigen::Index>(keys.size()), two_d ? 2 : 1);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    coords(r, 0) = L * static_cast<double>(keys[i][0]) / static_cast<double>(keys[i][1]);
    if (two_d) {
      coords(r, 1) = L * static_cast<double>(keys[i][2]) / static_cast<double>(keys[i][3]);
    }
  }
  if (kind == ModelKind::kInterval) {
    return std::make_shared<const AmbientSpace>(AmbientSpace::from_coords(std::move(coords)));
  }
  Vec periods = Vec::Constant(coords.cols(), L);
  return std::make_shared<const AmbientSpace>(
      AmbientSpace::from_periodic(std::move(coords), std::move(periods)));
}

double edge_average(const VertexField& h, const Edge& e) {
  return 0.5 * (h[static_cast<Eigen::Index>(e.u)] + h[static_cast<Eigen::Index>(e.v)]);
}

VertexField solve_resolvent(const DiscreteSpace& s, const VertexField& g, double lam) {
  // (lam - Delta) f = g  <=>  (lam M + K) f = M g with K = -M Delta symmetric.
  const Vec& m = s.measure();
  const Mat K = -(m.asDiagonal() * laplacian_matrix(s));
  Mat A = 0.5 * (K + K.transpose());
  A.diagonal() += lam * m;
  Eigen::LDLT<Mat> ldlt(A);
  require(ldlt.info() == Eigen::Success, "resolvent system factorization failed");
  VertexField f = ldlt.solve(m.cwiseProduct(g));
  // One refinement step keeps the resolvent identity at rounding level.
  const Vec r = m.cwiseProduct(g) - A * f;
  f += ldlt.solve(r);
  return f;
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "circle") return ModelKind::kCircle;
  if (name == "interval") return ModelKind::kInterval;
  if (name == "torus") return ModelKind::kTorus;
  throw Error("unknown model family '" + name + "' (expected circle, interval or torus)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCircle:
      return "circle";
    case ModelKind::kInterval:
      return "interval";
    case ModelKind::kTorus:
      return "torus";
  }
  return "?";
}

double ModelFamily::effective_length() const {
  if (length > 0.0) return length;
  return kind == ModelKind::kCircle ? 2.0 * std::numbers::pi : 1.0;
}

DiscreteSpace model_space(ModelKind kind, Index n, double length) {
  ModelFamily fam{kind, {n}, n, length};
  return model_sequence(fam).limit;
}

SpaceSequence model_sequence(const ModelFamily& family) {
  require(!family.sizes.empty(), "model family needs at least one size");
  for (std::size_t i = 1; i < family.sizes.size(); ++i) {
    require(family.sizes[i] > family.sizes[i - 1], "model family sizes must be strictly increasing");
  }
  require(!(family.length < 0.0) && std::isfinite(family.length),
          "model family length must be nonnegative");
  const double L = family.effective_length();
  const Index limit_size = family.limit_size ? family.limit_size : 4 * family.sizes.back();

  std::vector<Layout> layouts;
  for (Index n : family.sizes) layouts.push_back(layout(family.kind, n, L));
  layouts.push_back(layout(family.kind, limit_size, L));

  std::map<Key, Index> index;
  std::vector<Key> keys;
  std::vector<std::vector<Index>> embeds;
  for (const auto& lay : layouts) {
    std::vector<Index> emb;
    for (const Key& k : lay.keys) {
      auto [it, fresh] = index.emplace(k, keys.size());
      if (fresh) keys.push_back(k);
      emb.push_back(it->second);
    }
    embeds.push_back(std::move(emb));
  }
  AmbientPtr ambient = ambient_for(family.kind, keys, L);

  std::vector<DiscreteSpace> spaces;
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    spaces.emplace_back(ambient, embeds[i], layouts[i].edges, layouts[i].measure, 0);
  }
  DiscreteSpace limit = spaces.back();
  spaces.pop_back();
  SpaceSequence seq{ambient, std::move(spaces), std::move(limit)};
  seq.validate();
  return seq;
}

CoefficientSequence resolvent_coefficients(const SpaceSequence& seq, const AmbientFunction& g,
                                           double lam, double a0, const AmbientFunction& h,
                                           double slack, const std::optional<AmbientFunction>& g2) {
  require(lam > 0.0, "resolvent parameter lam must be positive");
  require(a0 > 0.0, "diffusion floor a0 must be positive");
  require(slack >= 0.0, "slack must be nonnegative");

  auto build = [&](const DiscreteSpace& s) {
    const VertexField gv = s.restrict(g);
    const VertexField hv = h ? s.restrict(h) : VertexField::Zero(static_cast<Eigen::Index>(s.size()));
    require((hv.array() >= 0.0).all(), "diffusion profile h must be nonnegative");
    const VertexField f1 = solve_resolvent(s, gv, lam);
    const VertexField g2v = g2 ? s.restrict(*g2) : gv;
    const VertexField f2 = g2 ? solve_resolvent(s, g2v, lam) : f1;

    CoefficientSet co;
    Vec a(static_cast<Eigen::Index>(s.edge_count()));
    for (Index e = 0; e < s.edge_count(); ++e) {
      a[static_cast<Eigen::Index>(e)] = edge_average(hv, s.edges()[e]) + a0;
    }
    co.a = EdgeField::symmetric_field(std::move(a));
    co.lambda = a0;
    co.theta1 = gradient_derivation(s, f1);
    co.theta2 = gradient_derivation(s, f2);
    const VertexField d1 = divergence(s, co.theta1);
    const VertexField d2 = divergence(s, co.theta2);
    const double scale = std::max({1.0, gv.cwiseAbs().maxCoeff(), g2v.cwiseAbs().maxCoeff()});
    const double res = std::max((d1 - (lam * f1 - gv)).cwiseAbs().maxCoeff(),
                                (d2 - (lam * f2 - g2v)).cwiseAbs().maxCoeff());
    require(res <= 1e-10 * scale, "resolvent identity div b_f = lam f - g failed (residual " +
                                      std::to_string(res) + ")");
    co.c = d1.cwiseMax(d2).array() + slack;
    return co;
  };

  CoefficientSequence out;
  for (const auto& s : seq.members) out.members.push_back(build(s));
  out.limit = build(seq.limit);
  return out;
}

CoefficientSequence eigen_coefficients(const SpaceSequence& seq, Index k, Index k2, double slack) {
  require(slack >= 0.0, "slack must be nonnegative");
  Index min_size = seq.limit.size();
  for (const auto& s : seq.members) min_size = std::min(min_size, s.size());
  require(k < min_size && k2 < min_size,
          "eigen index must be below the smallest member size " + std::to_string(min_size));
  const Index kmax = std::max(k, k2);

  const Spectrum lim = cheeger_spectrum(seq.limit, std::min(kmax + 2, seq.limit.size()));
  for (Index idx : {k, k2}) {
    const auto i = static_cast<Eigen::Index>(idx);
    const bool below = idx == 0 || lim.values[i] - lim.values[i - 1] > 1e-8;
    const bool above = i + 1 >= lim.values.size() || lim.values[i + 1] - lim.values[i] > 1e-8;
    if (!(below && above)) {
      throw Error("eigenvalue " + std::to_string(idx) +
                  " of the limit member is degenerate (ambiguous eigenspace); pick a simple "
                  "index or use the interval family");
    }
  }

  auto mode = [&](const DiscreteSpace& s, const Spectrum& sp, Index idx,
                  const VertexField* reference) -> VertexField {
    if (idx == 0) {
      return VertexField::Constant(static_cast<Eigen::Index>(s.size()),
                                   1.0 / std::sqrt(s.total_measure()));
    }
    VertexField u = sp.vectors.col(static_cast<Eigen::Index>(idx));
    if (reference && inner_m(u, *reference, s.measure()) < 0.0) u = -u;
    return u;
  };

  auto build = [&](const DiscreteSpace& s, bool is_limit) {
    const Spectrum sp = is_limit ? lim : cheeger_spectrum(s, kmax + 1);
    VertexField ref1, ref2;
    if (!is_limit) {
      ref1 = transport(seq.limit, lim.vectors.col(static_cast<Eigen::Index>(k)), s);
      ref2 = transport(seq.limit, lim.vectors.col(static_cast<Eigen::Index>(k2)), s);
    }
    const VertexField u1 = mode(s, sp, k, is_limit ? nullptr : &ref1);
    const VertexField u2 = mode(s, sp, k2, is_limit ? nullptr : &ref2);

    CoefficientSet co = CoefficientSet::trivial(s);
    co.theta1 = gradient_derivation(s, u1);
    co.theta2 = gradient_derivation(s, u2);
    const VertexField d1 = divergence(s, co.theta1);
    const VertexField d2 = divergence(s, co.theta2);
    const double l1 = k == 0 ? 0.0 : sp.values[static_cast<Eigen::Index>(k)];
    const double l2 = k2 == 0 ? 0.0 : sp.values[static_cast<Eigen::Index>(k2)];
    const double scale = std::max(1.0, sp.values.cwiseAbs().maxCoeff());
    const double res = std::max((d1 + l1 * u1).cwiseAbs().maxCoeff(),
                                (d2 + l2 * u2).cwiseAbs().maxCoeff());
    require(res <= 1e-10 * scale, "eigen identity div b_u = -lambda u failed (residual " +
                                      std::to_string(res) + ")");
    co.c = d1.cwiseMax(d2).array() + slack;
    return co;
  };

  CoefficientSequence out;
  for (const auto& s : seq.members) out.members.push_back(build(s, false));
  out.limit = build(seq.limit, true);
  return out;
}

}  // namespace dlab
