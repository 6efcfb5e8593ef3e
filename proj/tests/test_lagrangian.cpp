#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include "support.hpp"

using namespace contalg;
using namespace testing_support;

namespace {

// Partials of a Lagrangian by central differences of its value.
struct FdPartials {
  double L = 0.0, Ls = 0.0;
  Vector Lq, Ly, Lys;
  Matrix Lyy, Lyq;  // Lyq(a, i) = d2L/dy^a dq^i
};

FdPartials fd_partials(const ScalarField& f, const State& x) {
  const int n = x.n(), m = x.m();
  const double h = 1e-4;
  auto val = [&](const Vector& q, const Vector& y, double s) { return f.value(State{q, y, s, x.side}); };
  auto dy = [&](const Vector& q, const Vector& y, double s, int a) {
    Vector yp = y, ym = y;
    yp(a) += h;
    ym(a) -= h;
    return (val(q, yp, s) - val(q, ym, s)) / (2 * h);
  };
  FdPartials p;
  p.L = val(x.q, x.w, x.s);
  p.Ls = (val(x.q, x.w, x.s + h) - val(x.q, x.w, x.s - h)) / (2 * h);
  p.Lq = Vector::Zero(n);
  p.Ly = Vector::Zero(m);
  p.Lys = Vector::Zero(m);
  p.Lyy = Matrix::Zero(m, m);
  p.Lyq = Matrix::Zero(m, n);
  for (int i = 0; i < n; ++i) {
    Vector qp = x.q, qm = x.q;
    qp(i) += h;
    qm(i) -= h;
    p.Lq(i) = (val(qp, x.w, x.s) - val(qm, x.w, x.s)) / (2 * h);
    for (int a = 0; a < m; ++a) p.Lyq(a, i) = (dy(qp, x.w, x.s, a) - dy(qm, x.w, x.s, a)) / (2 * h);
  }
  for (int a = 0; a < m; ++a) {
    p.Ly(a) = dy(x.q, x.w, x.s, a);
    p.Lys(a) = (dy(x.q, x.w, x.s + h, a) - dy(x.q, x.w, x.s - h, a)) / (2 * h);
    for (int b = 0; b < m; ++b) {
      Vector yp = x.w, ym = x.w;
      yp(b) += h;
      ym(b) -= h;
      p.Lyy(a, b) = (dy(x.q, yp, x.s, a) - dy(x.q, ym, x.s, a)) / (2 * h);
    }
  }
  return p;
}

// Herglotz equations on a Lie algebroid, solved for dy/dt with FD partials:
//   d/dt L_y_a = rho^i_a L_q_i - y^b C^g_ab L_y_g + L_y_a L_s,
//   d/dt L_y_a = L_yy_ab dy^b/dt + L_yq_ai dq^i/dt + L_ys_a ds/dt,  ds/dt = L.
Vector fd_herglotz_acceleration(const AlgebroidModel& model, const ScalarField& L, const State& x) {
  const FdPartials p = fd_partials(L, x);
  const Matrix rho = model.anchor(x.q);
  const StructureTensor C = model.structure(x.q);
  const int m = model.m();
  Vector rhs = rho.transpose() * p.Lq + p.Ly * p.Ls;
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int g = 0; g < m; ++g) rhs(a) -= x.w(b) * C(g, a, b) * p.Ly(g);
    }
  }
  rhs -= p.Lyq * (rho * x.w) + p.Lys * p.L;
  return p.Lyy.partialPivLu().solve(rhs);
}

struct Case {
  AlgebroidModel model;
  ScalarField L;
};

std::vector<Case> cases() {
  return {
      {tangent_bundle(1), lag("0.5*exp(q1)*y1^2 - q1^2 - 0.3*s", 1, 1)},
      {tangent_bundle(2), lag("0.5*(y1^2 + y2^2) + q1*y2 - 0.5*s^2", 2, 2)},
      {lie_algebra(so3_constants()), lag("0.5*(y1^2 + 2*y2^2 + 3*y3^2) - 0.2*s + 0.1*s*y1", 0, 3)},
      {action_so3_on_r3(), lag("0.5*(y1^2 + y2^2 + y3^2) + 0.2*q3*y1 - 0.5*(q1^2 + q2^2) - 0.1*s*y2", 3, 3)},
      {test_atiyah(),
       lag("0.5*(y1^2 + y2^2) + 0.5*(y3^2 + 2*y4^2 + 3*y5^2) + 0.3*q1*y2*y3 - cos(q2) - 0.2*s - 0.1*s*y5", 2, 5)},
      {AlgebroidModel(2, 2,
                      {expr::base_field("1", 2), expr::base_field("0", 2), expr::base_field("0", 2),
                       expr::base_field("exp(q1)", 2)},
                      {ScalarField::constant(2, 0, 0.0), ScalarField::constant(2, 0, 1.0)}, "exp anchor"),
       lag("0.5*(y1^2 + y2^2) + 0.1*y1*y2*s - 0.5*q2^2 - 0.25*s", 2, 2)},
  };
}

}  // namespace

TEST(Lagrangian, EnergyClosedForm) {
  const ContactLagrangianSystem sys(tangent_bundle(1), lag("0.5*y1^2 - 0.5*q1^2 - 0.5*s", 1, 1));
  const State x = lstate(vec({0.4}), vec({1.5}), 2.0);
  EXPECT_DOUBLE_EQ(energy(sys, x), 0.5 * 1.5 * 1.5 + 0.5 * 0.4 * 0.4 + 0.5 * 2.0);
}

TEST(Lagrangian, OneDegreeOfFreedomClosedForm) {
  // L = e^q y^2/2 - q^2 - 0.3 s:  dy/dt = -y^2/2 - 2 q e^-q - 0.3 y
  const ContactLagrangianSystem sys(tangent_bundle(1), lag("0.5*exp(q1)*y1^2 - q1^2 - 0.3*s", 1, 1));
  Sampler rng(21);
  for (int k = 0; k < 20; ++k) {
    const State x = random_state(rng, 1, 1, Side::lagrangian, 2.0);
    const double q = x.q(0), y = x.w(0);
    const StateDerivative f = herglotz_field(sys, x);
    EXPECT_NEAR(f.dq(0), y, 1e-15);
    EXPECT_NEAR(f.dw(0), -0.5 * y * y - 2 * q * std::exp(-q) - 0.3 * y, 1e-13);
    EXPECT_NEAR(f.ds, 0.5 * std::exp(q) * y * y - q * q - 0.3 * x.s, 1e-14);
  }
}

TEST(Lagrangian, MagneticTermWithQuadraticActionClosedForm) {
  // L = |y|^2/2 + q1 y2 - s^2/2:  a1 = y2 - s y1,  a2 = -y1 - s (y2 + q1)
  const ContactLagrangianSystem sys(tangent_bundle(2), lag("0.5*(y1^2 + y2^2) + q1*y2 - 0.5*s^2", 2, 2));
  Sampler rng(22);
  for (int k = 0; k < 20; ++k) {
    const State x = random_state(rng, 2, 2, Side::lagrangian, 2.0);
    const double q1 = x.q(0), y1 = x.w(0), y2 = x.w(1), s = x.s;
    const StateDerivative f = herglotz_field(sys, x);
    EXPECT_NEAR(f.dw(0), y2 - s * y1, 1e-14);
    EXPECT_NEAR(f.dw(1), -y1 - s * (y2 + q1), 1e-14);
  }
}

TEST(Lagrangian, EulerPoincareHerglotzIsEulerTopWithDamping) {
  // L = y.I y/2 + kappa s:  I dy/dt = I y x y + kappa I y
  const double kappa = -0.2;
  const ContactLagrangianSystem sys(lie_algebra(so3_constants()),
                                    lag("0.5*(y1^2 + 2*y2^2 + 3*y3^2) + kappa*s", 0, 3, {{"kappa", kappa}}));
  const Eigen::Vector3d I(1, 2, 3);
  Sampler rng(23);
  for (int k = 0; k < 20; ++k) {
    const State x = random_state(rng, 0, 3, Side::lagrangian, 2.0);
    const Eigen::Vector3d y = x.w;
    const Eigen::Vector3d Iy = I.cwiseProduct(y);
    const Eigen::Vector3d expected = (Iy.cross(y) + kappa * Iy).cwiseQuotient(I);
    const StateDerivative f = herglotz_field(sys, x);
    EXPECT_LT((f.dw - expected).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(f.dq.size(), 0);
  }
}

TEST(Lagrangian, LagrangePoincareHerglotzOnAtiyah) {
  // Lagrange-Poincare-Herglotz with horizontal (xdot) and vertical (v) parts:
  //   d/dt L_xdot_j = L_q_j - L_v_A (B^A_ij xdot^i + c^A_DB A^B_j v^D) + L_s L_xdot_j
  //   d/dt L_v_B    = L_v_A (c^A_DB v^D - c^A_DB A^D_i xdot^i) + L_s L_v_B
  const AlgebroidModel model = test_atiyah();
  const ScalarField L =
      lag("0.5*(y1^2 + y2^2) + 0.5*(y3^2 + 2*y4^2 + 3*y5^2) + 0.3*q1*y2*y3 - cos(q2) - 0.2*s - 0.1*s*y5", 2, 5);
  const ContactLagrangianSystem sys(model, L);
  const StructureTensor c = so3_constants();
  Sampler rng(24);
  for (int k = 0; k < 10; ++k) {
    const State x = random_state(rng, 2, 5, Side::lagrangian);
    const double q1 = x.q(0), q2 = x.q(1);
    const double A[3][2] = {{q2, 0}, {0, q1}, {0.5, 0}};
    const double B12[3] = {-1 + 0.5 * q1, 1, -q1 * q2};
    auto Bc = [&](int Ai, int i, int j) { return i == j ? 0.0 : (i < j ? B12[Ai] : -B12[Ai]); };
    const Vector xd = x.w.head(2), v = x.w.tail(3);

    const DerivativeBundle d = L.eval(x, DerivativeRequest::all());
    const Vector Lxd = d.grad_w.head(2), Lv = d.grad_w.tail(3);
    Vector rhs(5);
    for (int j = 0; j < 2; ++j) {
      double t = 0.0;
      for (int Ai = 0; Ai < 3; ++Ai) {
        double inner = 0.0;
        for (int i = 0; i < 2; ++i) inner += Bc(Ai, i, j) * xd(i);
        for (int D = 0; D < 3; ++D) {
          for (int Bi = 0; Bi < 3; ++Bi) inner += c(Ai, D, Bi) * A[Bi][j] * v(D);
        }
        t += Lv(Ai) * inner;
      }
      rhs(j) = d.grad_q(j) - t + d.d_s * Lxd(j);
    }
    for (int Bi = 0; Bi < 3; ++Bi) {
      double t = 0.0;
      for (int Ai = 0; Ai < 3; ++Ai) {
        for (int D = 0; D < 3; ++D) {
          double hor = 0.0;
          for (int i = 0; i < 2; ++i) hor += A[D][i] * xd(i);
          t += Lv(Ai) * (c(Ai, D, Bi) * v(D) - c(Ai, D, Bi) * hor);
        }
      }
      rhs(2 + Bi) = t + d.d_s * Lv(Bi);
    }
    // d/dt L_y = W a + L_yq dq/dt + L_ys ds/dt, with dq/dt = xdot and ds/dt = L
    rhs -= d.mixed_qw.transpose() * xd + d.mixed_sw * d.value;
    const Vector expected = d.hess_ww.partialPivLu().solve(rhs);
    EXPECT_LT(max_abs(herglotz_field(sys, x).dw - expected), 1e-12);
  }
}

TEST(Lagrangian, HerglotzAgainstFiniteDifferenceOracle) {
  Sampler rng(25);
  for (const auto& c : cases()) {
    const ContactLagrangianSystem sys(c.model, c.L);
    for (int k = 0; k < 10; ++k) {
      const State x = random_state(rng, c.model.n(), c.model.m(), Side::lagrangian);
      const Vector expected = fd_herglotz_acceleration(c.model, c.L, x);
      EXPECT_LT(max_abs(herglotz_field(sys, x).dw - expected), 1e-6) << c.model.label();
    }
  }
}

TEST(LagrangianProperty, SectionSatisfiesContactEquations) {
  Sampler rng(26);
  for (const auto& c : cases()) {
    const ContactLagrangianSystem sys(c.model, c.L);
    for (int k = 0; k < 50; ++k) {
      const State x = random_state(rng, c.model.n(), c.model.m(), Side::lagrangian);
      EXPECT_LT(verify_lagrangian_section(sys, x).max_abs(), 1e-10) << c.model.label();
    }
  }
}

TEST(LagrangianProperty, SectionIsSecondOrder) {
  Sampler rng(27);
  for (const auto& c : cases()) {
    const ContactLagrangianSystem sys(c.model, c.L);
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(rng, c.model.n(), c.model.m(), Side::lagrangian);
      const SectionComponents g = lagrangian_section(sys, x);
      EXPECT_EQ(g.x, x.w);
      EXPECT_EQ(herglotz_field(sys, x).dq, c.model.anchor(x.q) * x.w);
    }
  }
}

TEST(LagrangianProperty, ReebSection) {
  Sampler rng(28);
  for (const auto& c : cases()) {
    const ContactLagrangianSystem sys(c.model, c.L);
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(rng, c.model.n(), c.model.m(), Side::lagrangian);
      const ReebResult r = reeb_coeffs(sys, x);
      EXPECT_LT(std::abs(r.eta_check), 1e-12);
      EXPECT_LT(r.d_eta_check, 1e-12);
      // the Reeb derivative of the energy is -dL/ds
      const double Ls = c.L.eval(x, DerivativeRequest::first()).d_s;
      EXPECT_NEAR(r.reeb_energy, -Ls, 1e-12);
    }
  }
}

TEST(LagrangianProperty, EnergyBalance) {
  Sampler rng(29);
  for (const auto& c : cases()) {
    const ContactLagrangianSystem sys(c.model, c.L);
    for (int k = 0; k < 20; ++k) {
      const State x = random_state(rng, c.model.n(), c.model.m(), Side::lagrangian);
      EXPECT_LT(std::abs(energy_balance_residual(sys, x)), 1e-10) << c.model.label();
      // oracle: central difference of E_L along the field
      const StateDerivative f = herglotz_field(sys, x);
      const double h = 1e-5;
      auto shifted = [&](double t) {
        return State{x.q + t * f.dq, x.w + t * f.dw, x.s + t * f.ds, Side::lagrangian};
      };
      const double dE = (energy(sys, shifted(h)) - energy(sys, shifted(-h))) / (2 * h);
      const double Ls = c.L.eval(x, DerivativeRequest::first()).d_s;
      EXPECT_NEAR(dE, Ls * energy(sys, x), 1e-7) << c.model.label();
    }
  }
}

TEST(Lagrangian, WrongSectionIsDetected) {
  const Case c = cases()[2];
  const ContactLagrangianSystem sys(c.model, c.L);
  const State x = lstate(Vector(0), vec({0.3, -0.4, 0.5}), 0.1);
  SectionComponents g = lagrangian_section(sys, x);
  g.v(1) += 1e-3;
  EXPECT_GT(verify_lagrangian_section(sys, x, g).max_abs(), 1e-4);
  g = lagrangian_section(sys, x);
  g.s += 1e-3;
  EXPECT_GT(std::abs(verify_lagrangian_section(sys, x, g).r1), 1e-4);
}

TEST(Lagrangian, SingularLagrangianIsRejected) {
  const ContactLagrangianSystem sys(tangent_bundle(2), lag("0.5*y1^2 - q2", 2, 2));
  const State x = lstate(vec({0, 0}), vec({1, 1}), 0);
  EXPECT_FALSE(regularity(sys, x).is_regular);
  try {
    herglotz_field(sys, x);
    FAIL() << "expected RegularityError";
  } catch (const RegularityError& e) {
    EXPECT_EQ(e.det(), 0.0);
  }
  EXPECT_THROW(reeb_coeffs(sys, x), RegularityError);
}

TEST(Lagrangian, IndefiniteButRegularIsAccepted) {
  const ContactLagrangianSystem sys(tangent_bundle(2), lag("y1*y2 - s", 2, 2));
  const State x = lstate(vec({0, 0}), vec({1, 2}), 0);
  const RegularityReport r = regularity(sys, x);
  EXPECT_TRUE(r.is_regular);
  EXPECT_NEAR(r.det, -1.0, 1e-15);
  // y1 y2: d/dt y2 = -y2, d/dt y1 = -y1
  EXPECT_LT(max_abs(herglotz_field(sys, x).dw - vec({-1, -2})), 1e-15);
}

TEST(Lagrangian, DimensionMismatch) {
  EXPECT_THROW(ContactLagrangianSystem(tangent_bundle(2), lag("y1", 1, 1)), DimensionError);
  const ContactLagrangianSystem sys(tangent_bundle(1), lag("0.5*y1^2", 1, 1));
  EXPECT_THROW(herglotz_field(sys, hstate(vec({0}), vec({1}), 0)), DimensionError);
  EXPECT_THROW(herglotz_field(sys, lstate(vec({0, 1}), vec({1}), 0)), DimensionError);
}
