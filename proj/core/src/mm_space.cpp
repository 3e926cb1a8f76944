#include "dlab/mm_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "dlab/calculus.hpp"

namespace dlab {

AmbientSpace AmbientSpace::from_coords(Mat coords) {
  require(coords.rows() > 0, "ambient space needs at least one point");
  require(coords.allFinite(), "ambient coordinates must be finite");
  AmbientSpace a;
  a.size_ = static_cast<Index>(coords.rows());
  a.coords_ = std::move(coords);
  return a;
}

AmbientSpace AmbientSpace::from_table(Mat table, std::optional<Mat> coords) {
  const auto n = table.rows();
  require(n > 0 && table.cols() == n, "distance table must be square and non-empty");
  require(table.allFinite(), "distance table must be finite");
  if (coords) {
    require(coords->rows() == n, "label coordinates must have one row per table point");
  }
  const double scale = std::max(1.0, table.maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    require(table(i, i) == 0.0, "distance table diagonal must be zero (point " +
                                    std::to_string(i) + ")");
    for (Eigen::Index j = 0; j < n; ++j) {
      require(table(i, j) >= 0.0, "distance table entries must be nonnegative");
      require(table(i, j) == table(j, i), "distance table must be symmetric (" +
                                              std::to_string(i) + "," + std::to_string(j) +
                                              ")");
    }
  }
  // Triangle inequality: d(i,j) <= min_k d(i,k) + d(k,j).
  const double tol = 1e-12 * scale;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto excess = table.col(j).array() - table.col(k).array() - table(k, j);
      Eigen::Index i = 0;
      if (excess.maxCoeff(&i) > tol) {
        std::ostringstream os;
        os << "distance table violates the triangle inequality at (" << i << "," << j
           << ") via " << k;
        throw Error(os.str());
      }
    }
  }
  AmbientSpace a;
  a.size_ = static_cast<Index>(n);
  a.table_ = std::move(table);
  a.coords_ = std::move(coords);
  return a;
}

AmbientSpace AmbientSpace::from_periodic(Mat coords, Vec periods) {
  require(periods.size() == coords.cols(), "one period per coordinate axis is required");
  require((periods.array() >= 0.0).all() && periods.allFinite(), "periods must be nonnegative");
  AmbientSpace a = from_coords(std::move(coords));
  a.periods_ = std::move(periods);
  return a;
}

double AmbientSpace::distance(Index p, Index q) const {
  if (table_) return (*table_)(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
  if (periods_) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < coords_->cols(); ++k) {
      double d = std::abs((*coords_)(static_cast<Eigen::Index>(p), k) -
                          (*coords_)(static_cast<Eigen::Index>(q), k));
      const double per = (*periods_)[k];
      if (per > 0.0) {
        d = std::fmod(d, per);
        d = std::min(d, per - d);
      }
      s += d * d;
    }
    return std::sqrt(s);
  }
  return (coords_->row(static_cast<Eigen::Index>(p)) - coords_->row(static_cast<Eigen::Index>(q)))
      .norm();
}

DiscreteSpace::DiscreteSpace(AmbientPtr ambient, std::vector<Index> embed, std::vector<Edge> edges,
                             Vec measure, Index basepoint)
    : ambient_(std::move(ambient)),
      embed_(std::move(embed)),
      edges_(std::move(edges)),
      measure_(std::move(measure)),
      basepoint_(basepoint) {
  require(ambient_ != nullptr, "space requires an ambient space");
  const Index n = embed_.size();
  require(n > 0, "space must have at least one vertex");
  require(static_cast<Index>(measure_.size()) == n, "measure length must equal vertex count");
  require(basepoint_ < n, "basepoint out of range");
  {
    std::set<Index> seen;
    for (Index p : embed_) {
      require(p < ambient_->size(), "embedding refers to a missing ambient point");
      require(seen.insert(p).second, "embedding must be injective (ambient point " +
                                         std::to_string(p) + " used twice)");
    }
  }
  for (Index x = 0; x < n; ++x) {
    require(std::isfinite(measure_[x]) && measure_[x] > 0.0,
            "measure must be positive at every vertex (vertex " + std::to_string(x) + ")");
  }
  adjacency_.assign(n, {});
  std::set<std::pair<Index, Index>> pairs;
  for (Index e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    require(ed.u < n && ed.v < n && ed.u != ed.v,
            "edge " + std::to_string(e) + " has invalid endpoints");
    require(pairs.insert({std::min(ed.u, ed.v), std::max(ed.u, ed.v)}).second,
            "duplicate edge between " + std::to_string(ed.u) + " and " + std::to_string(ed.v));
    require(ed.length > 0.0, "edge " + std::to_string(e) + " must have positive length");
    require(ed.conductance >= 0.0, "edge " + std::to_string(e) + " has negative conductance");
    const double d = ambient_->distance(embed_[ed.u], embed_[ed.v]);
    require(std::abs(d - ed.length) <= kIsometryTolerance * std::max(1.0, d),
            "edge " + std::to_string(e) + " length disagrees with the ambient distance");
    adjacency_[ed.u].push_back({ed.v, e, 1.0});
    adjacency_[ed.v].push_back({ed.u, e, -1.0});
  }
  // Connectivity through edges with positive conductance.
  std::vector<bool> seen(n, false);
  std::vector<Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Index x = stack.back();
    stack.pop_back();
    for (const auto& inc : adjacency_[x]) {
      if (edges_[inc.edge].conductance > 0.0 && !seen[inc.neighbor]) {
        seen[inc.neighbor] = true;
        stack.push_back(inc.neighbor);
      }
    }
  }
  for (Index x = 0; x < n; ++x) {
    require(seen[x], "graph is disconnected: vertex " + std::to_string(x) +
                         " is not reachable from vertex 0");
  }
}

VertexField DiscreteSpace::restrict(const AmbientFunction& f) const {
  VertexField out(size());
  for (Index x = 0; x < size(); ++x) out[x] = f(*ambient_, embed_[x]);
  return out;
}

void SpaceSequence::validate(bool require_monotone_basepoints) const {
  require(ambient != nullptr, "sequence requires an ambient space");
  require(!members.empty(), "sequence requires at least one member");
  require(limit.ambient() == ambient, "limit must share the sequence ambient space");
  for (const auto& s : members) {
    require(s.ambient() == ambient, "every member must share the sequence ambient space");
  }
  if (!require_monotone_basepoints) return;
  const Index limit_point = limit.embed()[limit.basepoint()];
  double prev = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < members.size(); ++i) {
    const auto& s = members[i];
    const double d = ambient->distance(s.embed()[s.basepoint()], limit_point);
    require(d <= prev, "basepoint distance increases at member " + std::to_string(i));
    prev = d;
  }
  require(prev < 1e-6, "basepoints do not converge to the limit basepoint");
}

double TestFunction::operator()(const AmbientSpace& ambient, Index point) const {
  double v = 1.0;
  for (const auto& [center, level] : factors) {
    v *= std::min(ambient.distance(point, center), level);
  }
  return v;
}

VertexField TestFamily::on(const DiscreteSpace& space, Index i) const {
  const TestFunction& f = functions.at(i);
  VertexField out(space.size());
  for (Index x = 0; x < space.size(); ++x) out[x] = f(*space.ambient(), space.embed()[x]);
  return out;
}

Mat shortest_path_metric(const DiscreteSpace& space) {
  const Index n = space.size();
  const double inf = std::numeric_limits<double>::infinity();
  Mat d = Mat::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), inf);
  using Item = std::pair<double, Index>;
  for (Index s = 0; s < n; ++s) {
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    auto row = d.row(static_cast<Eigen::Index>(s));
    row[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      auto [dist, x] = pq.top();
      pq.pop();
      if (dist > row[x]) continue;
      for (const auto& inc : space.incident(x)) {
        const double nd = dist + space.edges()[inc.edge].length;
        if (nd < row[inc.neighbor]) {
          row[inc.neighbor] = nd;
          pq.push({nd, inc.neighbor});
        }
      }
    }
    for (Index y = 0; y < n; ++y) {
      if (!std::isfinite(row[y])) {
        throw Error("disconnected graph: vertex " + std::to_string(y) +
                    " is unreachable from vertex " + std::to_string(s));
      }
    }
  }
  // Dijkstra from both ends may differ in the last ulp; symmetrize.
  d = 0.5 * (d + d.transpose()).eval();
  return d;
}

Ball ball_volume(const DiscreteSpace& space, const Mat& metric, Index center, double r) {
  require(r >= 0.0, "ball radius must be nonnegative");
  require(center < space.size(), "ball center out of range");
  Ball b;
  for (Index x = 0; x < space.size(); ++x) {
    if (metric(static_cast<Eigen::Index>(center), static_cast<Eigen::Index>(x)) < r) {
      b.vertices.push_back(x);
      b.measure += space.measure()[x];
    }
  }
  return b;
}

Ball ball_volume(const DiscreteSpace& space, Index center, double r) {
  return ball_volume(space, shortest_path_metric(space), center, r);
}

TestFamily build_test_family(AmbientPtr ambient, const std::vector<Index>& centers,
                             const std::vector<double>& levels, Index max_products) {
  require(ambient != nullptr, "test family requires an ambient space");
  require(!centers.empty(), "test family requires at least one center");
  require(!levels.empty(), "test family requires at least one truncation level");
  TestFamily fam{ambient, {}};
  std::set<std::pair<Index, double>> seen;
  for (Index c : centers) {
    require(c < ambient->size(), "test center out of range");
    for (double k : levels) {
      require(k > 0.0, "truncation levels must be positive");
      if (!seen.insert({c, k}).second) continue;
      fam.functions.push_back({{{c, k}}, 1.0, k});
    }
  }
  const Index generators = fam.functions.size();
  Index added = 0;
  for (Index i = 0; i < generators && added < max_products; ++i) {
    for (Index j = i + 1; j < generators && added < max_products; ++j) {
      const auto& f = fam.functions[i];
      const auto& g = fam.functions[j];
      TestFunction p;
      p.factors = {f.factors[0], g.factors[0]};
      p.sup_bound = f.sup_bound * g.sup_bound;
      // Lip(fg) <= sup|f| Lip(g) + sup|g| Lip(f)
      p.lipschitz = f.sup_bound * g.lipschitz + g.sup_bound * f.lipschitz;
      fam.functions.push_back(std::move(p));
      ++added;
    }
  }
  return fam;
}

std::vector<CrossSpaceDefect> cross_space_defects(const SpaceSequence& seq,
                                                  const std::vector<VertexField>& f_members,
                                                  const VertexField& f_limit,
                                                  const TestFamily& tests) {
  require(f_members.size() == seq.members.size(), "one field per member is required");
  require(static_cast<Index>(f_limit.size()) == seq.limit.size(),
          "limit field length mismatch");
  const auto& lim = seq.limit;
  std::vector<Vec> phi_lim;
  for (Index i = 0; i < tests.size(); ++i) phi_lim.push_back(tests.on(lim, i));
  const double norm_lim = inner_m(f_limit, f_limit, lim.measure());
  const double ch_lim = cheeger_energy(lim, f_limit);

  std::vector<CrossSpaceDefect> out;
  for (Index n = 0; n < seq.members.size(); ++n) {
    const auto& s = seq.members[n];
    const auto& f = f_members[n];
    require(static_cast<Index>(f.size()) == s.size(),
            "field length mismatch at member " + std::to_string(n));
    CrossSpaceDefect d;
    for (Index i = 0; i < tests.size(); ++i) {
      const Vec phi = tests.on(s, i);
      d.measure_defect = std::max(
          d.measure_defect, std::abs(phi.dot(s.measure()) - phi_lim[i].dot(lim.measure())));
      d.l2_weak_defect = std::max(d.l2_weak_defect, std::abs(inner_m(phi, f, s.measure()) -
                                                             inner_m(phi_lim[i], f_limit,
                                                                     lim.measure())));
    }
    d.l2_norm_gap = inner_m(f, f, s.measure()) - norm_lim;
    d.w12_energy_gap = cheeger_energy(s, f) - ch_lim;
    out.push_back(d);
  }
  return out;
}

}  // namespace dlab
