#pragma once

// Components of 1- and 2-sections of the prolongation bundle in the local
// coframe {X^a, V^a, V^s}, and contraction with sections written in the dual
// frame {X_a, V_a, V_s}. The same layout serves E x R and E* x R.

#include "contalg/state.hpp"

namespace contalg {

/// Section components: Gamma = x^a X_a + v^a V_a + s V_s.
struct SectionComponents {
  Vector x;
  Vector v;
  double s = 0.0;
};

/// A 1-section a_a X^a + b_a V^a + c V^s packed as [a, b, c].
inline Vector pack_covector(const Vector& a, const Vector& b, double c) {
  Vector out(a.size() + b.size() + 1);
  out << a, b, c;
  return out;
}

/// eta and d(eta). The 2-section is stored by its values on frame pairs:
///   xx(a, b) = d eta(X_a, X_b)   (antisymmetric)
///   xv(a, b) = d eta(X_a, V_b)
///   xs(a)    = d eta(X_a, V_s)
/// with every V-V and V-V_s value zero.
struct CoframeComponents {
  Vector eta_a;
  Vector eta_b;
  double eta_c = 0.0;
  Matrix xx;
  Matrix xv;
  Vector xs;

  int m() const { return static_cast<int>(eta_a.size()); }

  double contract_eta(const SectionComponents& g) const {
    return eta_a.dot(g.x) + eta_b.dot(g.v) + eta_c * g.s;
  }

  Vector eta() const { return pack_covector(eta_a, eta_b, eta_c); }

  /// i_Gamma d eta, packed as [X^b, V^b, V^s] components.
  Vector contract_d_eta(const SectionComponents& g) const {
    const Vector on_x = xx.transpose() * g.x - xv * g.v - g.s * xs;
    const Vector on_v = xv.transpose() * g.x;
    const double on_s = xs.dot(g.x);
    return pack_covector(on_x, on_v, on_s);
  }
};

/// Residuals of i_G eta = -E and i_G d eta = dE - R(E) eta.
struct SectionResiduals {
  double r1 = 0.0;
  Vector r2;  // [X^a, V^a, V^s]

  double max_abs() const {
    double r = std::abs(r1);
    if (r2.size() > 0) r = std::max(r, r2.cwiseAbs().maxCoeff());
    return r;
  }
};

}  // namespace contalg
