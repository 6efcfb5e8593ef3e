#pragma once

// Contact Lagrangian systems L(q, y, s) on a Lie algebroid E: energy,
// regularity, the Reeb section, the Herglotz field and a residual check of
// the defining contact equations of the Lagrangian section.

#include <utility>

#include "contalg/algebroid.hpp"
#include "contalg/calculus.hpp"
#include "contalg/coframe.hpp"
#include "contalg/linalg.hpp"

namespace contalg {

class ContactLagrangianSystem {
public:
  ContactLagrangianSystem(AlgebroidModel model, ScalarField lagrangian,
                          RegularityTolerance tol = {})
      : model_(std::move(model)), L_(std::move(lagrangian)), tol_(tol) {
    if (L_.n() != model_.n() || L_.m() != model_.m()) {
      throw DimensionError("Lagrangian arity does not match the algebroid (n, m)");
    }
  }

  const AlgebroidModel& model() const { return model_; }
  const ScalarField& lagrangian() const { return L_; }
  const RegularityTolerance& tolerance() const { return tol_; }

  /// All partials of L needed by the dynamics.
  DerivativeBundle derivatives(const State& x) const {
    check(x, "lagrangian");
    return L_.eval(x, DerivativeRequest::all());
  }

  void check(const State& x, const char* where) const {
    require_side(x, Side::lagrangian, where);
    require_dims(x, model_.n(), model_.m(), where);
  }

private:
  AlgebroidModel model_;
  ScalarField L_;
  RegularityTolerance tol_;
};

/// E_L = y^a dL/dy^a - L.
inline double energy(const ContactLagrangianSystem& sys, const State& x) {
  sys.check(x, "energy");
  DerivativeRequest r;
  r.grad_w = true;
  const DerivativeBundle d = sys.lagrangian().eval(x, r);
  return x.w.dot(d.grad_w) - d.value;
}

inline RegularityReport regularity(const ContactLagrangianSystem& sys, const State& x) {
  sys.check(x, "regularity");
  DerivativeRequest r;
  r.hess_ww = true;
  return DenseLU(sys.lagrangian().eval(x, r).hess_ww).regularity(sys.tolerance());
}

namespace detail {

inline DenseLU regular_hessian(const ContactLagrangianSystem& sys, const Matrix& W, const char* where) {
  DenseLU lu(W);
  const RegularityReport rep = lu.regularity(sys.tolerance());
  if (!rep.is_regular) {
    throw RegularityError(std::string(where) + ": Lagrangian is not regular here (det W = " +
                              std::to_string(rep.det) + ", condition " + std::to_string(rep.condition) + ")",
                          rep.det);
  }
  return lu;
}

/// Partials of E_L: dE/dq^i, dE/dy^a, dE/ds.
struct EnergyPartials {
  double value = 0.0;
  Vector dq;
  Vector dy;
  double ds = 0.0;
};

inline EnergyPartials energy_partials(const DerivativeBundle& d, const Vector& y) {
  EnergyPartials e;
  e.value = y.dot(d.grad_w) - d.value;
  e.dq = d.mixed_qw * y - d.grad_q;
  e.dy = d.hess_ww * y;
  e.ds = d.mixed_sw.dot(y) - d.d_s;
  return e;
}

}  // namespace detail

struct ReebResult {
  double v_s = 1.0;
  Vector v;                 // fiber components v^a
  double reeb_energy = 0.0; // rho(R_L)(E_L) = dE/ds + v^a dE/dy^a
  double eta_check = 0.0;   // i_R eta_L - 1
  double d_eta_check = 0.0; // max |i_R d eta_L|
};

/// Coframe components of eta_L = V^s - (dL/dy^a) X^a and d eta_L.
inline CoframeComponents lagrangian_coframe(const ContactLagrangianSystem& sys, const State& x,
                                            const DerivativeBundle& d) {
  const int m = sys.model().m();
  const Matrix rho = sys.model().anchor(x.q);
  const StructureTensor C = sys.model().structure(x.q);

  CoframeComponents cf;
  cf.eta_a = -d.grad_w;
  cf.eta_b = Vector::Zero(m);
  cf.eta_c = 1.0;

  // rho^i_b d2L/dq^i dy^a, as (a, b)
  const Matrix K = d.mixed_qw.transpose() * rho;
  cf.xx = K - K.transpose();
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double t = 0.0;
      for (int g = 0; g < m; ++g) t += C(g, a, b) * d.grad_w(g);
      cf.xx(a, b) += t;
    }
  }
  cf.xv = d.hess_ww;
  cf.xs = d.mixed_sw;
  return cf;
}

inline ReebResult reeb_coeffs(const ContactLagrangianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.derivatives(x);
  const DenseLU lu = detail::regular_hessian(sys, d.hess_ww, "reeb_coeffs");
  ReebResult r;
  r.v = -lu.solve(d.mixed_sw);
  const detail::EnergyPartials e = detail::energy_partials(d, x.w);
  r.reeb_energy = e.ds + r.v.dot(e.dy);

  const CoframeComponents cf = lagrangian_coframe(sys, x, d);
  const SectionComponents R{Vector::Zero(sys.model().m()), r.v, 1.0};
  r.eta_check = cf.contract_eta(R) - 1.0;
  r.d_eta_check = cf.contract_d_eta(R).cwiseAbs().maxCoeff();
  return r;
}

/// Right-hand side of W B = rhs for the fiber acceleration B.
inline Vector herglotz_rhs(const ContactLagrangianSystem& sys, const State& x, const DerivativeBundle& d) {
  const int m = sys.model().m();
  const Matrix rho = sys.model().anchor(x.q);
  const StructureTensor C = sys.model().structure(x.q);
  const Vector& y = x.w;

  Vector rhs = rho.transpose() * d.grad_q + d.d_s * d.grad_w - d.value * d.mixed_sw;
  // y^b rho^i_b d2L/dq^i dy^a
  rhs -= d.mixed_qw.transpose() * (rho * y);
  for (int a = 0; a < m; ++a) {
    double t = 0.0;
    for (int b = 0; b < m; ++b) {
      if (y(b) == 0.0) continue;
      for (int g = 0; g < m; ++g) t += y(b) * C(g, a, b) * d.grad_w(g);
    }
    rhs(a) -= t;
  }
  return rhs;
}

/// Herglotz equations: dq = rho y, dy = B, ds = L.
inline StateDerivative herglotz_field(const ContactLagrangianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.derivatives(x);
  const DenseLU lu = detail::regular_hessian(sys, d.hess_ww, "herglotz_field");
  StateDerivative dx;
  dx.dq = sys.model().anchor(x.q) * x.w;
  dx.dw = lu.solve(herglotz_rhs(sys, x, d));
  dx.ds = d.value;
  return dx;
}

/// Components (y, B, L) of the Lagrangian section at x.
inline SectionComponents lagrangian_section(const ContactLagrangianSystem& sys, const State& x) {
  const StateDerivative dx = herglotz_field(sys, x);
  return {x.w, dx.dw, dx.ds};
}

/// r1 = i_G eta_L + E_L and r2 = i_G d eta_L - dE_L + rho(R_L)(E_L) eta_L for
/// the given section components.
inline SectionResiduals verify_lagrangian_section(const ContactLagrangianSystem& sys, const State& x,
                                                  const SectionComponents& g) {
  const DerivativeBundle d = sys.derivatives(x);
  const DenseLU lu = detail::regular_hessian(sys, d.hess_ww, "verify_lagrangian_section");
  const Vector v = -lu.solve(d.mixed_sw);
  const detail::EnergyPartials e = detail::energy_partials(d, x.w);
  const double reeb_energy = e.ds + v.dot(e.dy);

  const Matrix rho = sys.model().anchor(x.q);
  const Vector dE = pack_covector(rho.transpose() * e.dq, e.dy, e.ds);
  const CoframeComponents cf = lagrangian_coframe(sys, x, d);

  SectionResiduals r;
  r.r1 = cf.contract_eta(g) + e.value;
  r.r2 = cf.contract_d_eta(g) - dE + reeb_energy * cf.eta();
  return r;
}

inline SectionResiduals verify_lagrangian_section(const ContactLagrangianSystem& sys, const State& x) {
  return verify_lagrangian_section(sys, x, lagrangian_section(sys, x));
}

/// dE_L/dt along the Herglotz field plus rho(R_L)(E_L) E_L; zero when the
/// field is correct.
inline double energy_balance_residual(const ContactLagrangianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.derivatives(x);
  const DenseLU lu = detail::regular_hessian(sys, d.hess_ww, "energy_balance_residual");
  const Vector v = -lu.solve(d.mixed_sw);
  const detail::EnergyPartials e = detail::energy_partials(d, x.w);
  const double reeb_energy = e.ds + v.dot(e.dy);
  const StateDerivative f = herglotz_field(sys, x);
  return e.dq.dot(f.dq) + e.dy.dot(f.dw) + e.ds * f.ds + reeb_energy * e.value;
}

}  // namespace contalg
