#pragma once

// Contact Hamiltonian systems H(q, p, s) on the dual bundle E* x R: the
// Hamiltonian and evolution sections, the dissipation identity and a
// residual check of the defining equations.

#include <utility>

#include "contalg/algebroid.hpp"
#include "contalg/calculus.hpp"
#include "contalg/coframe.hpp"

namespace contalg {

class ContactHamiltonianSystem {
public:
  ContactHamiltonianSystem(AlgebroidModel model, ScalarField hamiltonian)
      : model_(std::move(model)), H_(std::move(hamiltonian)) {
    if (H_.n() != model_.n() || H_.m() != model_.m()) {
      throw DimensionError("Hamiltonian arity does not match the algebroid (n, m)");
    }
  }

  const AlgebroidModel& model() const { return model_; }
  const ScalarField& hamiltonian() const { return H_; }

  DerivativeBundle first(const State& x) const {
    check(x, "hamiltonian");
    return H_.eval(x, DerivativeRequest::first());
  }

  void check(const State& x, const char* where) const {
    require_side(x, Side::hamiltonian, where);
    require_dims(x, model_.n(), model_.m(), where);
  }

private:
  AlgebroidModel model_;
  ScalarField H_;
};

namespace detail {

/// Fiber part of the contact Hamilton equations:
/// -(rho^i_a dH/dq^i + C^g_ab p_g dH/dp_b + p_a dH/ds).
inline Vector momentum_rate(const Matrix& rho, const StructureTensor& C, const Vector& p,
                            const DerivativeBundle& d) {
  const int m = static_cast<int>(p.size());
  Vector dp = -(rho.transpose() * d.grad_q) - d.d_s * p;
  for (int a = 0; a < m; ++a) {
    double t = 0.0;
    for (int b = 0; b < m; ++b) {
      if (d.grad_w(b) == 0.0) continue;
      for (int g = 0; g < m; ++g) t += C(g, a, b) * p(g) * d.grad_w(b);
    }
    dp(a) -= t;
  }
  return dp;
}

}  // namespace detail

/// Evolution section: the Hamiltonian section plus H times the Reeb section,
/// so ds = p_a dH/dp_a.
inline StateDerivative evolution_field(const ContactHamiltonianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.first(x);
  const Matrix rho = sys.model().anchor(x.q);
  StateDerivative dx;
  dx.dq = rho * d.grad_w;
  dx.dw = detail::momentum_rate(rho, sys.model().structure(x.q), x.w, d);
  dx.ds = x.w.dot(d.grad_w);
  return dx;
}

/// Contact Hamilton equations: dq = rho dH/dp, dp as in momentum_rate,
/// ds = p_a dH/dp_a - H.
inline StateDerivative hamilton_field(const ContactHamiltonianSystem& sys, const State& x) {
  StateDerivative dx = evolution_field(sys, x);
  dx.ds -= sys.hamiltonian().value(x);
  return dx;
}

/// Predicted dH/dt along the Hamiltonian section: -(dH/ds) H.
inline double dissipation_rate(const ContactHamiltonianSystem& sys, const State& x) {
  sys.check(x, "dissipation_rate");
  DerivativeRequest r;
  r.d_s = true;
  const DerivativeBundle d = sys.hamiltonian().eval(x, r);
  return -d.d_s * d.value;
}

/// grad H . F_H - dissipation_rate, from the chain rule at a single state.
inline double dissipation_residual(const ContactHamiltonianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.first(x);
  const StateDerivative f = hamilton_field(sys, x);
  return d.grad_q.dot(f.dq) + d.grad_w.dot(f.dw) + d.d_s * f.ds + d.d_s * d.value;
}

/// eta = V^s - p_a X^a, d eta = X^a ^ V^a + 1/2 C^g_ab p_g X^a ^ X^b.
inline CoframeComponents hamiltonian_coframe(const ContactHamiltonianSystem& sys, const State& x) {
  const int m = sys.model().m();
  const StructureTensor C = sys.model().structure(x.q);
  CoframeComponents cf;
  cf.eta_a = -x.w;
  cf.eta_b = Vector::Zero(m);
  cf.eta_c = 1.0;
  cf.xx = Matrix::Zero(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      double t = 0.0;
      for (int g = 0; g < m; ++g) t += C(g, a, b) * x.w(g);
      cf.xx(a, b) = t;
    }
  }
  cf.xv = Matrix::Identity(m, m);
  cf.xs = Vector::Zero(m);
  return cf;
}

/// Components of the Hamiltonian section: (dH/dp, dp/dt, ds/dt).
inline SectionComponents hamiltonian_section(const ContactHamiltonianSystem& sys, const State& x) {
  const DerivativeBundle d = sys.first(x);
  const StateDerivative f = hamilton_field(sys, x);
  return {d.grad_w, f.dw, f.ds};
}

/// r1 = i_xi eta + H and r2 = i_xi d eta - dH + R(H) eta, with R = V_s.
inline SectionResiduals verify_hamiltonian_section(const ContactHamiltonianSystem& sys, const State& x,
                                                   const SectionComponents& xi) {
  const DerivativeBundle d = sys.first(x);
  const Matrix rho = sys.model().anchor(x.q);
  const CoframeComponents cf = hamiltonian_coframe(sys, x);
  const Vector dH = pack_covector(rho.transpose() * d.grad_q, d.grad_w, d.d_s);
  SectionResiduals r;
  r.r1 = cf.contract_eta(xi) + d.value;
  r.r2 = cf.contract_d_eta(xi) - dH + d.d_s * cf.eta();
  return r;
}

inline SectionResiduals verify_hamiltonian_section(const ContactHamiltonianSystem& sys, const State& x) {
  return verify_hamiltonian_section(sys, x, hamiltonian_section(sys, x));
}

}  // namespace contalg
