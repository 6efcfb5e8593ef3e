#pragma once

#include <Eigen/LU>
#include <cmath>
#include <limits>

#include "contalg/state.hpp"

namespace contalg {

/// Thresholds for declaring a fiber Hessian W regular.
struct RegularityTolerance {
  double det_rel = 1e-12;   // |det W| must exceed det_rel * scale(W)^m
  double cond_cap = 1e12;   // 1-norm condition number must stay below this
};

struct RegularityReport {
  double det = 0.0;
  double condition = 0.0;  // +inf when singular
  bool is_regular = false;
};

/// Dense LU with partial pivoting of a small square matrix, plus the
/// diagnostics used for regularity decisions.
class DenseLU {
public:
  explicit DenseLU(const Matrix& a) : a_(a), lu_(a) {}

  double det() const { return a_.rows() == 0 ? 1.0 : lu_.determinant(); }

  /// kappa_1(A) = |A|_1 |A^-1|_1, computed from the explicit inverse.
  double condition() const {
    if (a_.rows() == 0) return 1.0;
    if (det() == 0.0) return std::numeric_limits<double>::infinity();
    Matrix inv = lu_.inverse();
    double c = a_.cwiseAbs().colwise().sum().maxCoeff() * inv.cwiseAbs().colwise().sum().maxCoeff();
    return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
  }

  RegularityReport regularity(const RegularityTolerance& tol = {}) const {
    RegularityReport r;
    r.det = det();
    r.condition = condition();
    const double scale = a_.rows() == 0 ? 1.0 : a_.cwiseAbs().maxCoeff();
    const double threshold = tol.det_rel * std::pow(scale, static_cast<double>(a_.rows()));
    r.is_regular = scale > 0.0 && std::abs(r.det) > threshold && r.condition < tol.cond_cap;
    return r;
  }

  Vector solve(const Vector& b) const { return lu_.solve(b); }
  Matrix solve(const Matrix& b) const { return lu_.solve(b); }
  Matrix inverse() const { return lu_.inverse(); }

private:
  Matrix a_;
  Eigen::PartialPivLU<Matrix> lu_;
};

}  // namespace contalg
