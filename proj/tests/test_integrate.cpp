#include <gtest/gtest.h>

#include "support.hpp"

using namespace contalg;
using namespace testing_support;

namespace {

// H = p^2/2 + q^2/2 + s/2 on T*R x R: q'' + q'/2 + q = 0 and s' = p^2/2 - q^2/2 - s/2.
struct DampedOscillator {
  double q0, p0, s0;
  double wd = std::sqrt(1.0 - 1.0 / 16.0);

  double q(double t) const {
    const double b = (p0 + 0.25 * q0) / wd;
    return std::exp(-0.25 * t) * (q0 * std::cos(wd * t) + b * std::sin(wd * t));
  }
  double p(double t) const {
    const double b = (p0 + 0.25 * q0) / wd;
    const double e = std::exp(-0.25 * t);
    return e * (-0.25 * (q0 * std::cos(wd * t) + b * std::sin(wd * t)) + wd * (-q0 * std::sin(wd * t) + b * std::cos(wd * t)));
  }
  // s(t) = e^{-t/2} (s0 + int_0^t e^{r/2} (p^2 - q^2)/2 dr), composite Simpson with 20000 panels
  double s(double t) const {
    const int n = 20000;
    const double h = t / n;
    auto g = [&](double r) { return std::exp(0.5 * r) * 0.5 * (p(r) * p(r) - q(r) * q(r)); };
    double acc = g(0) + g(t);
    for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * g(k * h);
    return std::exp(-0.5 * t) * (s0 + acc * h / 3.0);
  }
};

ContactHamiltonianSystem oscillator() {
  return ContactHamiltonianSystem(tangent_bundle(1), ham("0.5*p1^2 + 0.5*q1^2 + 0.5*s", 1, 1));
}

Field hamilton(const ContactHamiltonianSystem& sys) {
  return [&sys](const State& x) { return hamilton_field(sys, x); };
}

double error_at_end(const ContactHamiltonianSystem& sys, const DampedOscillator& ref, double t, double h) {
  const Trajectory tr = integrate(hamilton(sys), hstate(vec({ref.q0}), vec({ref.p0}), ref.s0), t, h);
  const State& x = tr.back();
  return std::max({std::abs(x.q(0) - ref.q(t)), std::abs(x.w(0) - ref.p(t)), std::abs(x.s - ref.s(t))});
}

}  // namespace

TEST(Integrate, ReferenceSolutionSatisfiesOde) {
  // guards the oracle itself: finite differences of the closed form
  const DampedOscillator ref{1.0, 0.0, 0.0};
  const double t = 1.3, h = 1e-5;
  EXPECT_NEAR((ref.q(t + h) - ref.q(t - h)) / (2 * h), ref.p(t), 1e-8);
  EXPECT_NEAR((ref.p(t + h) - ref.p(t - h)) / (2 * h), -ref.q(t) - 0.5 * ref.p(t), 1e-8);
  const double ds = (ref.s(t + h) - ref.s(t - h)) / (2 * h);
  EXPECT_NEAR(ds, 0.5 * ref.p(t) * ref.p(t) - 0.5 * ref.q(t) * ref.q(t) - 0.5 * ref.s(t), 1e-7);
}

TEST(Integrate, Rk4MatchesClosedForm) {
  const auto sys = oscillator();
  const DampedOscillator ref{1.0, 0.0, 0.0};
  EXPECT_LT(error_at_end(sys, ref, 10.0, 1e-2), 1e-8);
}

TEST(Integrate, Rk4IsFourthOrder) {
  const auto sys = oscillator();
  const DampedOscillator ref{0.5, -1.0, 0.3};
  const double e1 = error_at_end(sys, ref, 2.0, 0.1);
  const double e2 = error_at_end(sys, ref, 2.0, 0.05);
  const double e3 = error_at_end(sys, ref, 2.0, 0.025);
  EXPECT_GT(e1 / e2, 12.0);
  EXPECT_LT(e1 / e2, 20.0);
  EXPECT_GT(e2 / e3, 12.0);
  EXPECT_LT(e2 / e3, 20.0);
}

TEST(Integrate, LastStepLandsOnEndTime) {
  const auto sys = oscillator();
  const Trajectory tr = integrate(hamilton(sys), hstate(vec({1}), vec({0}), 0), 1.0, 0.3);
  EXPECT_EQ(tr.steps, 4);
  EXPECT_EQ(tr.times.back(), 1.0);
  // an exact multiple does not take an extra sliver step
  EXPECT_EQ(integrate(hamilton(sys), hstate(vec({1}), vec({0}), 0), 1.0, 0.1).steps, 10);
}

TEST(Integrate, SamplingAndDiagnostics) {
  const auto sys = oscillator();
  const std::vector<Diagnostic> diags = {{"H", [&](const State& x) { return sys.hamiltonian().value(x); }},
                                         {"q", [](const State& x) { return x.q(0); }}};
  const Trajectory tr = integrate(hamilton(sys), hstate(vec({1}), vec({0}), 0), 1.0, 0.1, diags, 3);
  ASSERT_EQ(tr.size(), 5u);
  EXPECT_NEAR(tr.times[1], 0.3, 1e-15);
  EXPECT_EQ(tr.times[4], 1.0);
  ASSERT_EQ(tr.diagnostic_names, (std::vector<std::string>{"H", "q"}));
  EXPECT_EQ(tr.diagnostics[0][0], 0.5);
  EXPECT_EQ(tr.diagnostics[4][1], tr.states[4].q(0));
  EXPECT_EQ(tr.max_abs_diagnostic(1), 1.0);
}

TEST(Integrate, FailureStopsTheRun) {
  // dq/dt = q^2 from q = 1 blows up at t = 1
  const Field blowup = [](const State& x) {
    return StateDerivative{x.q.cwiseProduct(x.q), Vector::Zero(x.m()), 0.0};
  };
  const Trajectory tr = integrate(blowup, hstate(vec({1}), Vector(0), 0), 2.0, 0.01);
  EXPECT_TRUE(tr.failed);
  EXPECT_GT(tr.failure_time, 0.9);
  EXPECT_LT(tr.failure_time, 1.1);

  const Field throwing = [](const State& x) -> StateDerivative {
    if (x.q(0) > 0.53) throw DomainError("outside the chart");
    return StateDerivative{Vector::Ones(1), Vector::Zero(0), 0.0};
  };
  const Trajectory tr2 = integrate(throwing, hstate(vec({0}), Vector(0), 0), 1.0, 0.1);
  EXPECT_TRUE(tr2.failed);
  EXPECT_NE(tr2.message.find("outside the chart"), std::string::npos);
  EXPECT_NEAR(tr2.failure_time, 0.5, 1e-12);
  EXPECT_EQ(tr2.steps, 5);
}

TEST(Integrate, ArgumentChecks) {
  const auto sys = oscillator();
  const State x0 = hstate(vec({1}), vec({0}), 0);
  EXPECT_THROW(integrate(hamilton(sys), x0, 1.0, 0.0), DomainError);
  EXPECT_THROW(integrate(hamilton(sys), x0, -1.0, 0.1), DomainError);
  EXPECT_THROW(integrate(hamilton(sys), x0, 1.0, 0.1, {}, 0), DomainError);
  EXPECT_THROW(adaptive_integrate(hamilton(sys), x0, 1.0, AdaptiveOptions{.tol = 0.0}), DomainError);
}

TEST(Integrate, AdaptiveMeetsTolerance) {
  const auto sys = oscillator();
  const DampedOscillator ref{1.0, 0.5, -0.2};
  for (double tol : {1e-6, 1e-9}) {
    const Trajectory tr = adaptive_integrate(hamilton(sys), hstate(vec({1.0}), vec({0.5}), -0.2), 10.0,
                                             AdaptiveOptions{.tol = tol});
    ASSERT_FALSE(tr.failed);
    EXPECT_EQ(tr.times.back(), 10.0);
    const State& x = tr.back();
    const double err = std::max({std::abs(x.q(0) - ref.q(10)), std::abs(x.w(0) - ref.p(10)),
                                 std::abs(x.s - ref.s(10))});
    // local tolerance per step, accumulated over the accepted steps
    EXPECT_LT(err, 10 * tol * tr.steps) << tol;
    for (std::size_t k = 1; k < tr.size(); ++k) EXPECT_GT(tr.times[k], tr.times[k - 1]);
  }
}

TEST(Integrate, AdaptiveReportsUnderflowNearBlowup) {
  const Field blowup = [](const State& x) {
    return StateDerivative{x.q.cwiseProduct(x.q), Vector::Zero(x.m()), 0.0};
  };
  bool stopped = false;
  try {
    const Trajectory tr = adaptive_integrate(blowup, hstate(vec({1}), Vector(0), 0), 2.0);
    stopped = tr.failed;
  } catch (const ConvergenceError&) {
    stopped = true;
  }
  EXPECT_TRUE(stopped);
}

TEST(Integrate, AdaptiveAgreesWithFineFixedStep) {
  const auto sys = oscillator();
  const State x0 = hstate(vec({1.0}), vec({0.5}), -0.2);
  const Trajectory a = adaptive_integrate(hamilton(sys), x0, 5.0, AdaptiveOptions{.tol = 1e-12});
  const Trajectory f = integrate(hamilton(sys), x0, 5.0, 1e-4);
  EXPECT_LT(max_abs_diff(a.back(), f.back()), 1e-8);
}

TEST(Integrate, AdaptiveNeedsFewerStepsAtEqualError) {
  // smooth decay with a slow tail: large steps pay off once the transient is gone
  const auto sys = oscillator();
  const DampedOscillator ref{1.0, 0.5, -0.2};
  const State x0 = hstate(vec({1.0}), vec({0.5}), -0.2);
  const double t = 20.0;
  const Trajectory a = adaptive_integrate(hamilton(sys), x0, t, AdaptiveOptions{.tol = 1e-9});
  auto err = [&](const State& x) {
    return std::max({std::abs(x.q(0) - ref.q(t)), std::abs(x.w(0) - ref.p(t)), std::abs(x.s - ref.s(t))});
  };
  const double target = err(a.back());
  // smallest fixed-step count reaching the same error
  int fixed_steps = 0;
  for (int steps = 10; steps < 100000; steps = steps * 11 / 10) {
    const Trajectory f = integrate(hamilton(sys), x0, t, t / steps);
    if (err(f.back()) <= target) {
      fixed_steps = f.steps;
      break;
    }
  }
  ASSERT_GT(fixed_steps, 0);
  EXPECT_LT(a.steps, fixed_steps);
}

TEST(IntegrateProperty, FourthOrderOnAcceptanceFlows) {
  // global error against a step-h/64 reference; ratio of errors at h and h/2
  const ContactLagrangianSystem tq(tangent_bundle(1), lag("0.5*y1^2 - 0.5*q1^2 - 0.5*s", 1, 1));
  const ContactLagrangianSystem top(lie_algebra(so3_constants()), lag("0.5*(y1^2 + 2*y2^2 + 3*y3^2) - 0.2*s", 0, 3));
  const ContactHamiltonianSystem tq_h = induced_hamiltonian(tq);
  const ContactHamiltonianSystem top_h = induced_hamiltonian(top);
  struct Flow {
    Field f;
    State x0;
  };
  const std::vector<Flow> flows = {
      {[&](const State& x) { return herglotz_field(tq, x); }, lstate(vec({1.0}), vec({0.5}), 0.0)},
      {[&](const State& x) { return herglotz_field(top, x); }, lstate(Vector(0), vec({0.3, 1.0, -0.4}), 0.0)},
      {[&](const State& x) { return hamilton_field(tq_h, x); }, hstate(vec({1.0}), vec({0.5}), 0.0)},
      {[&](const State& x) { return hamilton_field(top_h, x); }, hstate(Vector(0), vec({0.3, 2.0, -1.2}), 0.0)},
  };
  for (const auto& fl : flows) {
    const double t = 5.0, h = 0.1;
    const State ref = integrate(fl.f, fl.x0, t, h / 64).back();
    const double e1 = max_abs_diff(integrate(fl.f, fl.x0, t, h).back(), ref);
    const double e2 = max_abs_diff(integrate(fl.f, fl.x0, t, h / 2).back(), ref);
    EXPECT_GT(e1 / e2, 12.0);
    EXPECT_LT(e1 / e2, 20.0);
  }
}
