#pragma once

// Legendre transform (q, y, s) -> (q, dL/dy, s), its Newton inverse, the
// induced Hamiltonian H = E_L o Leg^-1 and the trajectory-level comparison
// of the Herglotz flow with the contact Hamilton flow of H.

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "contalg/hamiltonian.hpp"
#include "contalg/integrate.hpp"
#include "contalg/lagrangian.hpp"

namespace contalg {

struct NewtonOptions {
  int max_iterations = 50;
  int max_halvings = 30;
  double tol = 1e-10;
};

inline State legendre(const ContactLagrangianSystem& sys, const State& x) {
  sys.check(x, "legendre");
  DerivativeRequest r;
  r.grad_w = true;
  State out = x;
  out.w = sys.lagrangian().eval(x, r).grad_w;
  out.side = Side::hamiltonian;
  return out;
}

/// Solves dL/dy (q, y, s) = p for y by damped Newton, starting from `guess`
/// (y = p when absent). Each step is halved until the residual decreases.
inline State legendre_inverse(const ContactLagrangianSystem& sys, const State& hx,
                              const std::optional<Vector>& guess = std::nullopt,
                              const NewtonOptions& opt = {}) {
  require_side(hx, Side::hamiltonian, "legendre_inverse");
  require_dims(hx, sys.model().n(), sys.model().m(), "legendre_inverse");
  State x = hx;
  x.side = Side::lagrangian;
  x.w = guess ? *guess : hx.w;
  if (x.w.size() != hx.w.size()) throw DimensionError("legendre_inverse: guess has the wrong length");

  DerivativeRequest grad;
  grad.grad_w = true;
  DerivativeRequest newton = grad;
  newton.hess_ww = true;
  auto residual = [&](const Vector& y) {
    State t = x;
    t.w = y;
    return Vector(sys.lagrangian().eval(t, grad).grad_w - hx.w);
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    const DerivativeBundle d = sys.lagrangian().eval(x, newton);
    const Vector r = d.grad_w - hx.w;
    const double norm = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    if (norm < opt.tol) return x;
    const DenseLU lu(d.hess_ww);
    const RegularityReport rep = lu.regularity(sys.tolerance());
    if (!rep.is_regular) {
      throw RegularityError("legendre_inverse: singular W at Newton iterate (det W = " + std::to_string(rep.det) +
                                ")",
                            rep.det);
    }
    const Vector step = -lu.solve(r);
    double lambda = 1.0;
    bool decreased = false;
    for (int k = 0; k <= opt.max_halvings; ++k, lambda *= 0.5) {
      const Vector trial = x.w + lambda * step;
      const Vector rt = residual(trial);
      if (rt.allFinite() && rt.cwiseAbs().maxCoeff() < norm) {
        x.w = trial;
        decreased = true;
        break;
      }
    }
    if (!decreased) {
      throw ConvergenceError("legendre_inverse: no decrease after " + std::to_string(opt.max_halvings) +
                             " step halvings (residual " + std::to_string(norm) + ")");
    }
  }
  const Vector r = residual(x.w);
  if (r.size() && r.cwiseAbs().maxCoeff() >= opt.tol) {
    throw ConvergenceError("legendre_inverse: no convergence in " + std::to_string(opt.max_iterations) +
                           " iterations (residual " + std::to_string(r.cwiseAbs().maxCoeff()) + ")");
  }
  return x;
}

/// H(q, p, s) = E_L(Leg^-1(q, p, s)). Derivatives follow from the implicit
/// function rule with the factored W at the inverse point:
///   dH/dq = -dL/dq, dH/dp = y, dH/ds = -dL/ds,
///   d2H/dp2 = W^-1, d2H/dq dp = -L_qy W^-1, d2H/ds dp = -W^-1 L_sy.
class InducedHamiltonianBody final : public FieldBody {
public:
  explicit InducedHamiltonianBody(ContactLagrangianSystem sys) : sys_(std::move(sys)) {}

  DerivativeBundle evaluate(const Vector& q, const Vector& p, double s,
                            const DerivativeRequest& request) const override {
    if (request.hess_qq) throw Error("induced Hamiltonian: base Hessian is not available");
    const State x = legendre_inverse(sys_, State{q, p, s, Side::hamiltonian});
    const DerivativeBundle d = sys_.lagrangian().eval(x, DerivativeRequest::all());
    DerivativeBundle out;
    out.value = x.w.dot(d.grad_w) - d.value;
    if (request.grad_q) out.grad_q = -d.grad_q;
    if (request.grad_w) out.grad_w = x.w;
    if (request.d_s) out.d_s = -d.d_s;
    if (request.any_fiber_second()) {
      const DenseLU lu(d.hess_ww);
      if (request.hess_ww) {
        out.hess_ww = lu.inverse();
        out.hess_ww = 0.5 * (out.hess_ww + out.hess_ww.transpose()).eval();
      }
      if (request.mixed_qw) out.mixed_qw = -lu.solve(Matrix(d.mixed_qw.transpose())).transpose();
      if (request.mixed_sw) out.mixed_sw = -lu.solve(d.mixed_sw);
    }
    return out;
  }

  std::string describe() const override {
    return "E_L o Leg^-1 for L = " + sys_.lagrangian().describe();
  }

private:
  ContactLagrangianSystem sys_;
};

inline ContactHamiltonianSystem induced_hamiltonian(const ContactLagrangianSystem& sys) {
  const int n = sys.model().n();
  const int m = sys.model().m();
  return ContactHamiltonianSystem(sys.model(),
                                  ScalarField(n, m, std::make_shared<InducedHamiltonianBody>(sys)));
}

struct EquivalenceResult {
  double sup_gap = 0.0;
  std::vector<double> times;
  std::vector<double> gaps;
};

/// Integrates the Herglotz flow from x0 and the contact Hamilton flow of the
/// induced Hamiltonian from Leg(x0) with the same RK4 settings, and measures
/// |Leg(c(t)) - sigma(t)|_inf at the stored samples.
inline EquivalenceResult equivalence_check(const ContactLagrangianSystem& sys, const State& x0, double t_end,
                                           double h, int sample_every = 1) {
  const ContactHamiltonianSystem ham = induced_hamiltonian(sys);
  const Trajectory lag = integrate([&](const State& x) { return herglotz_field(sys, x); }, x0, t_end, h, {},
                                   sample_every);
  if (lag.failed) {
    throw ConvergenceError("equivalence_check: Herglotz flow failed at t = " + std::to_string(lag.failure_time) +
                           ": " + lag.message);
  }
  const Trajectory hm = integrate([&](const State& x) { return hamilton_field(ham, x); }, legendre(sys, x0),
                                  t_end, h, {}, sample_every);
  if (hm.failed) {
    throw ConvergenceError("equivalence_check: Hamilton flow failed at t = " + std::to_string(hm.failure_time) +
                           ": " + hm.message);
  }
  EquivalenceResult out;
  for (std::size_t k = 0; k < lag.size(); ++k) {
    const double gap = max_abs_diff(legendre(sys, lag.states[k]), hm.states[k]);
    out.times.push_back(lag.times[k]);
    out.gaps.push_back(gap);
    out.sup_gap = std::max(out.sup_gap, gap);
  }
  return out;
}

}  // namespace contalg
