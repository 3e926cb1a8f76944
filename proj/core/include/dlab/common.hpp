#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Real value per vertex of a DiscreteSpace.
using VertexField = Eigen::VectorXd;

using Index = std::size_t;

/// Raised for precondition and consistency failures throughout the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

/// L^2(m) inner product.
inline double inner_m(const Vec& f, const Vec& g, const Vec& m) {
  return (f.array() * g.array() * m.array()).sum();
}

}  // namespace dlab
