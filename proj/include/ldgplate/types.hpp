/**
 * @file types.hpp
 * @brief Small fixed-size linear algebra aliases and the library error type.
 */
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>

namespace ldgplate {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

/// Sparse matrices are always column-major doubles with int indices.
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Coefficients of a 3-component broken field: row = scalar DoF, column = component.
using FieldCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Second derivatives of a 3-component map, one 2x2 Hessian per component.
struct Hessian3 {
  Mat2 comp[3];
};

using ScalarFunction = std::function<double(const Vec2 &)>;
using VectorFunction = std::function<Vec3(const Vec2 &)>;
using GradientFunction = std::function<Mat32(const Vec2 &)>;

enum class ErrorKind {
  invalid_domain,
  invalid_parameter,
  degenerate_cell,
  missing_data,
  invalid_metric,
  ill_posed_system,
  nonconvergence,
  energy_increase,
  unknown_preset,
  config,
  io,
  internal
};

inline const char *to_string(ErrorKind k) {
  switch (k) {
  case ErrorKind::invalid_domain: return "invalid-domain";
  case ErrorKind::invalid_parameter: return "invalid-parameter";
  case ErrorKind::degenerate_cell: return "degenerate-cell";
  case ErrorKind::missing_data: return "missing-data";
  case ErrorKind::invalid_metric: return "invalid-metric";
  case ErrorKind::ill_posed_system: return "ill-posed-system";
  case ErrorKind::nonconvergence: return "nonconvergence";
  case ErrorKind::energy_increase: return "energy-increase";
  case ErrorKind::unknown_preset: return "unknown-preset";
  case ErrorKind::config: return "config";
  case ErrorKind::io: return "io";
  case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Frobenius inner product A:B.
inline double frob(const Mat2 &a, const Mat2 &b) { return (a.array() * b.array()).sum(); }

} // namespace ldgplate
