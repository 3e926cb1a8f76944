#include "dlab/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace dlab {
namespace {

Mat matrix_from(const Json& j, const std::string& where) {
  require(j.is_array() && !j.empty(), where + " must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 1);
  Mat out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (row.is_number()) {
      require(cols == 1, where + "[" + std::to_string(i) + "] must be an array");
      out(i, 0) = row.get<double>();
      continue;
    }
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
            where + "[" + std::to_string(i) + "] must have " + std::to_string(cols) + " entries");
    for (Eigen::Index k = 0; k < cols; ++k) {
      require(row[static_cast<std::size_t>(k)].is_number(),
              where + "[" + std::to_string(i) + "][" + std::to_string(k) + "] must be a number");
      out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
  }
  return out;
}

Vec vector_from(const Json& j, Eigen::Index n, const std::string& where) {
  if (j.is_number()) return Vec::Constant(n, j.get<double>());
  require(j.is_array(), where + " must be a number or an array");
  require(static_cast<Eigen::Index>(j.size()) == n,
          where + " must have " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(j[static_cast<std::size_t>(i)].is_number(),
            where + "[" + std::to_string(i) + "] must be a number");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

Index index_from(const Json& j, const std::string& where) {
  require(j.is_number_integer() && j.get<long long>() >= 0,
          where + " must be a nonnegative integer");
  return j.get<Index>();
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Vec& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  require(obj.is_object(), where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error("unknown key '" + key + "' at " + where);
    }
  }
}

DiscreteSpace space_from_json(const Json& j, const std::string& where) {
  reject_unknown_keys(j, {"ambient", "vertices", "edges", "measure", "basepoint"}, where);
  require(j.contains("ambient"), "missing key 'ambient' at " + where);
  const Json& amb = j["ambient"];
  const std::string aw = where + ".ambient";
  reject_unknown_keys(amb, {"coords", "distance_table", "periods"}, aw);
  AmbientPtr ambient;
  if (amb.contains("distance_table")) {
    require(!amb.contains("periods"), "'periods' cannot be combined with a distance table at " + aw);
    std::optional<Mat> labels;
    if (amb.contains("coords")) labels = matrix_from(amb["coords"], aw + ".coords");
    ambient = std::make_shared<const AmbientSpace>(
        AmbientSpace::from_table(matrix_from(amb["distance_table"], aw + ".distance_table"), labels));
  } else {
    require(amb.contains("coords"), "ambient needs 'coords' or 'distance_table' at " + aw);
    Mat coords = matrix_from(amb["coords"], aw + ".coords");
    if (amb.contains("periods")) {
      Vec periods = vector_from(amb["periods"], coords.cols(), aw + ".periods");
      ambient = std::make_shared<const AmbientSpace>(
          AmbientSpace::from_periodic(std::move(coords), std::move(periods)));
    } else {
      ambient = std::make_shared<const AmbientSpace>(AmbientSpace::from_coords(std::move(coords)));
    }
  }

  std::vector<Index> embed;
  if (j.contains("vertices")) {
    require(j["vertices"].is_array(), where + ".vertices must be an array");
    for (std::size_t i = 0; i < j["vertices"].size(); ++i) {
      embed.push_back(index_from(j["vertices"][i], where + ".vertices[" + std::to_string(i) + "]"));
      require(embed.back() < ambient->size(),
              where + ".vertices[" + std::to_string(i) + "] is not an ambient point");
    }
  } else {
    for (Index p = 0; p < ambient->size(); ++p) embed.push_back(p);
  }

  std::vector<Edge> edges;
  require(j.contains("edges") && j["edges"].is_array(), "missing array 'edges' at " + where);
  for (std::size_t e = 0; e < j["edges"].size(); ++e) {
    const Json& ej = j["edges"][e];
    const std::string ew = where + ".edges[" + std::to_string(e) + "]";
    reject_unknown_keys(ej, {"u", "v", "length", "conductance"}, ew);
    require(ej.contains("u") && ej.contains("v"), "edge needs 'u' and 'v' at " + ew);
    Edge edge;
    edge.u = index_from(ej["u"], ew + ".u");
    edge.v = index_from(ej["v"], ew + ".v");
    require(edge.u < embed.size() && edge.v < embed.size(), "edge endpoint out of range at " + ew);
    edge.length = ej.contains("length") ? ej["length"].get<double>()
                                        : ambient->distance(embed[edge.u], embed[edge.v]);
    edge.conductance = ej.value("conductance", 1.0);
    edges.push_back(edge);
  }
  const auto n = static_cast<Eigen::Index>(embed.size());
  const Vec m = j.contains("measure") ? vector_from(j["measure"], n, where + ".measure")
                                      : Vec::Ones(n);
  const Index base = j.contains("basepoint") ? index_from(j["basepoint"], where + ".basepoint") : 0;
  return DiscreteSpace(ambient, std::move(embed), std::move(edges), m, base);
}

Json space_to_json(const DiscreteSpace& space) {
  Json amb;
  const AmbientSpace& a = *space.ambient();
  if (a.table()) {
    amb["distance_table"] = matrix_to_json(*a.table());
    if (a.coords()) amb["coords"] = matrix_to_json(*a.coords());
  } else {
    amb["coords"] = matrix_to_json(*a.coords());
    if (a.periods()) amb["periods"] = vector_to_json(*a.periods());
  }
  Json edges = Json::array();
  for (const Edge& e : space.edges()) {
    edges.push_back({{"u", e.u}, {"v", e.v}, {"length", e.length}, {"conductance", e.conductance}});
  }
  return {{"ambient", amb},
          {"vertices", space.embed()},
          {"edges", edges},
          {"measure", vector_to_json(space.measure())},
          {"basepoint", space.basepoint()}};
}

CoefficientSet coefficients_from_json(const Json& j, const DiscreteSpace& space,
                                      const std::string& where) {
  reject_unknown_keys(j, {"a", "lambda", "theta1", "theta2", "c"}, where);
  CoefficientSet co = CoefficientSet::trivial(space);
  const auto ne = static_cast<Eigen::Index>(space.edge_count());
  const auto nv = static_cast<Eigen::Index>(space.size());
  if (j.contains("a")) co.a = EdgeField::symmetric_field(vector_from(j["a"], ne, where + ".a"));
  if (j.contains("lambda")) {
    require(j["lambda"].is_number(), where + ".lambda must be a number");
    co.lambda = j["lambda"].get<double>();
  } else if (j.contains("a")) {
    co.lambda = co.a.values.minCoeff();
  }
  if (j.contains("theta1")) {
    co.theta1 = EdgeField::antisymmetric(vector_from(j["theta1"], ne, where + ".theta1"));
  }
  if (j.contains("theta2")) {
    co.theta2 = EdgeField::antisymmetric(vector_from(j["theta2"], ne, where + ".theta2"));
  }
  if (j.contains("c")) co.c = vector_from(j["c"], nv, where + ".c");
  co.check_sizes(space);
  return co;
}

Json coefficients_to_json(const CoefficientSet& coeffs) {
  return {{"a", vector_to_json(coeffs.a.values)},
          {"lambda", coeffs.lambda},
          {"theta1", vector_to_json(coeffs.theta1.values)},
          {"theta2", vector_to_json(coeffs.theta2.values)},
          {"c", vector_to_json(coeffs.c)}};
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_kernel_csv(std::ostream& os, const std::vector<HeatKernel>& kernels) {
  os << "t,x,y,p\n";
  for (const auto& k : kernels) {
    for (Eigen::Index x = 0; x < k.p.rows(); ++x) {
      for (Eigen::Index y = 0; y < k.p.cols(); ++y) {
        os << format_double(k.t) << ',' << x << ',' << y << ',' << format_double(k.p(x, y)) << '\n';
      }
    }
  }
}

void write_paths_csv(std::ostream& os, const std::vector<PathSample>& paths) {
  os << "path_id,jump_time,state\n";
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.times.size(); ++i) {
      os << p.id << ',' << format_double(p.times[i]) << ',' << p.states[i] << '\n';
    }
    if (std::isfinite(p.lifetime)) {
      os << p.id << ',' << format_double(p.lifetime) << ',' << kCemetery << '\n';
    }
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "member_index,check_name,defect\n";
  for (const auto& r : report.records) {
    os << r.member << ',' << r.check << ',' << format_double(r.defect) << '\n';
  }
}

}  // namespace dlab
