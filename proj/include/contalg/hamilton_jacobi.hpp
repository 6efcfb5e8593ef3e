#pragma once

// Sections gamma = (gamma_0, gamma_s) of E* x R -> Q, 1-jets of functions,
// the Legendrian residual and the Hamilton-Jacobi checks.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contalg/hamiltonian.hpp"
#include "contalg/integrate.hpp"

namespace contalg {

/// A section q -> (gamma_a(q), gamma_s(q)). Either given by m + 1 base
/// fields, or the 1-jet (rho^T grad f, f) of a base function f.
class SectionGamma {
public:
  static SectionGamma explicit_fields(std::vector<ScalarField> gamma_0, ScalarField gamma_s) {
    const int n = gamma_s.n();
    if (gamma_s.m() != 0) throw DimensionError("gamma_s must be a field on the base");
    for (const auto& g : gamma_0) {
      if (g.n() != n || g.m() != 0) throw DimensionError("gamma_0 entries must be fields on the base");
    }
    SectionGamma out;
    out.n_ = n;
    out.m_ = static_cast<int>(gamma_0.size());
    out.gamma_0_ = std::move(gamma_0);
    out.gamma_s_ = std::move(gamma_s);
    return out;
  }

  static SectionGamma one_jet(const AlgebroidModel& model, ScalarField f) {
    if (f.n() != model.n() || f.m() != 0) throw DimensionError("one_jet: f must be a field on the base Q");
    SectionGamma out;
    out.n_ = model.n();
    out.m_ = model.m();
    out.jet_model_ = model;
    out.gamma_s_ = std::move(f);
    return out;
  }

  int n() const { return n_; }
  int m() const { return m_; }
  bool is_jet() const { return jet_model_.has_value(); }

  Vector gamma_0(const Vector& q) const {
    if (jet_model_) return jet_model_->anchor(q).transpose() * gamma_s_.gradient_at(q);
    Vector g(m_);
    for (int a = 0; a < m_; ++a) g(a) = gamma_0_[static_cast<std::size_t>(a)].value_at(q);
    return g;
  }

  double gamma_s(const Vector& q) const { return gamma_s_.value_at(q); }
  Vector grad_gamma_s(const Vector& q) const { return gamma_s_.gradient_at(q); }

  /// d gamma_a / dq^i as an m x n matrix.
  Matrix jacobian_0(const Vector& q) const {
    Matrix J(m_, n_);
    if (n_ == 0) return J;
    if (jet_model_) {
      // d_j (rho^i_a f_i) = (d_j rho^i_a) f_i + rho^i_a f_ij
      const DerivativeBundle d = gamma_s_.eval(q, Vector(), 0.0, DerivativeRequest::base_second());
      const Matrix rho = jet_model_->anchor(q);
      const std::vector<Matrix> drho = jet_model_->anchor_derivatives(q);
      J = rho.transpose() * d.hess_qq;
      for (int j = 0; j < n_; ++j) J.col(j) += drho[static_cast<std::size_t>(j)].transpose() * d.grad_q;
      return J;
    }
    for (int a = 0; a < m_; ++a) J.row(a) = gamma_0_[static_cast<std::size_t>(a)].gradient_at(q).transpose();
    return J;
  }

  /// The point gamma(q) of E* x R.
  State at(const Vector& q) const { return State{q, gamma_0(q), gamma_s(q), Side::hamiltonian}; }

private:
  int n_ = 0;
  int m_ = 0;
  std::vector<ScalarField> gamma_0_;
  ScalarField gamma_s_;
  std::optional<AlgebroidModel> jet_model_;
};

inline SectionGamma one_jet(const AlgebroidModel& model, const ScalarField& f) {
  return SectionGamma::one_jet(model, f);
}

/// d^E gamma_s - gamma_0; zero exactly when gamma is Legendrian.
inline Vector legendrian_residual(const AlgebroidModel& model, const SectionGamma& gamma, const Vector& q) {
  model.check_q(q);
  return model.anchor(q).transpose() * gamma.grad_gamma_s(q) - gamma.gamma_0(q);
}

/// Fiber components dH/dp of the section xi_H^gamma on E.
inline Vector xi_h_gamma(const ContactHamiltonianSystem& sys, const SectionGamma& gamma, const Vector& q) {
  DerivativeRequest r;
  r.grad_w = true;
  return sys.hamiltonian().eval(gamma.at(q), r).grad_w;
}

struct RelatednessResiduals {
  Vector r_p;
  double r_s = 0.0;
  double max_abs() const {
    double v = std::abs(r_s);
    if (r_p.size() > 0) v = std::max(v, r_p.cwiseAbs().maxCoeff());
    return v;
  }
};

/// Difference between xi_H at gamma(q) and the push-forward of xi_H^gamma
/// by gamma, in the p and s components (the q components agree by
/// construction):
///   r_p[a] = -(rho^i_a H_qi + C^g_ab gamma_g H_pb + gamma_a H_s) - rho^i_b H_pb d_i gamma_a
///   r_s    = gamma_a H_pa - H - rho^i_a H_pa d_i gamma_s
inline RelatednessResiduals relatedness_residuals(const ContactHamiltonianSystem& sys, const SectionGamma& gamma,
                                                  const Vector& q) {
  const State x = gamma.at(q);
  const StateDerivative f = hamilton_field(sys, x);
  RelatednessResiduals r;
  r.r_p = f.dw - gamma.jacobian_0(q) * f.dq;
  r.r_s = f.ds - gamma.grad_gamma_s(q).dot(f.dq);
  return r;
}

enum class HJSection { hamiltonian, evolution };

struct JetResiduals {
  Vector d_e;                    // d^E(H o j1 f)
  std::optional<double> value;   // (H o j1 f) - level, hamiltonian section only

  double max_abs() const {
    double v = value ? std::abs(*value) : 0.0;
    if (d_e.size() > 0) v = std::max(v, d_e.cwiseAbs().maxCoeff());
    return v;
  }
};

/// Hamilton-Jacobi residuals for gamma = j1 f. For the Hamiltonian section
/// both d^E(H o gamma) and H o gamma - level must vanish; for the evolution
/// section only the first.
inline JetResiduals jet_hj_residuals(const ContactHamiltonianSystem& sys, const ScalarField& f, const Vector& q,
                                     HJSection which = HJSection::hamiltonian, double level = 0.0) {
  const SectionGamma gamma = one_jet(sys.model(), f);
  const State x = gamma.at(q);
  const DerivativeBundle d = sys.first(x);
  // d_i (H o gamma) = H_qi + H_pb d_i gamma_b + H_s d_i gamma_s
  const Vector total = d.grad_q + gamma.jacobian_0(q).transpose() * d.grad_w + d.d_s * gamma.grad_gamma_s(q);
  JetResiduals r;
  r.d_e = sys.model().anchor(q).transpose() * total;
  if (which == HJSection::hamiltonian) r.value = d.value - level;
  return r;
}

struct ProjectedResult {
  double sup_gap = 0.0;
  std::vector<double> times;
  std::vector<double> gaps;
  double max_hj_residual = 0.0;  // along the base curve
};

/// Integrates the base curve dq/dt = rho(q) xi_H^gamma(q) for gamma = j1 f,
/// lifts it through gamma and compares with the contact Hamilton flow from
/// gamma(q0).
inline ProjectedResult projected_dynamics_check(const ContactHamiltonianSystem& sys, const ScalarField& f,
                                                const Vector& q0, double t_end, double h, int sample_every = 1) {
  const SectionGamma gamma = one_jet(sys.model(), f);
  Field base = [&](const State& x) {
    StateDerivative dx;
    dx.dq = sys.model().anchor(x.q) * xi_h_gamma(sys, gamma, x.q);
    dx.dw = Vector(0);
    dx.ds = 0.0;
    return dx;
  };
  const State b0{q0, Vector(0), 0.0, Side::lagrangian};
  const Trajectory curve = integrate(base, b0, t_end, h, {}, sample_every);
  if (curve.failed) {
    throw ConvergenceError("projected_dynamics_check: base flow failed at t = " +
                           std::to_string(curve.failure_time) + ": " + curve.message);
  }
  const Trajectory full = integrate([&](const State& x) { return hamilton_field(sys, x); }, gamma.at(q0), t_end, h,
                                    {}, sample_every);
  if (full.failed) {
    throw ConvergenceError("projected_dynamics_check: Hamilton flow failed at t = " +
                           std::to_string(full.failure_time) + ": " + full.message);
  }
  ProjectedResult out;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const Vector& q = curve.states[k].q;
    const double gap = max_abs_diff(gamma.at(q), full.states[k]);
    out.times.push_back(curve.times[k]);
    out.gaps.push_back(gap);
    out.sup_gap = std::max(out.sup_gap, gap);
    out.max_hj_residual = std::max(out.max_hj_residual, jet_hj_residuals(sys, f, q).max_abs());
  }
  return out;
}

}  // namespace contalg
