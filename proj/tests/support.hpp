#pragma once

#include <cmath>
#include <map>
#include <string>

#include "contalg/contalg.hpp"

namespace testing_support {

using namespace contalg;

inline ScalarField lag(const std::string& text, int n, int m, const std::map<std::string, double>& params = {}) {
  return expr::field(text, expr::Context{n, m, expr::Chart::lagrangian, {}}, params);
}

inline ScalarField ham(const std::string& text, int n, int m, const std::map<std::string, double>& params = {}) {
  return expr::field(text, expr::Context{n, m, expr::Chart::hamiltonian, {}}, params);
}

inline State lstate(Vector q, Vector y, double s) { return State{std::move(q), std::move(y), s, Side::lagrangian}; }
inline State hstate(Vector q, Vector p, double s) { return State{std::move(q), std::move(p), s, Side::hamiltonian}; }

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline State random_state(Sampler& rng, int n, int m, Side side, double radius = 1.0) {
  return State{rng.uniform_vector(n, -radius, radius), rng.uniform_vector(m, -radius, radius),
               rng.uniform(-radius, radius), side};
}

inline double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// The nonflat so(3) connection used throughout the tests:
///   A_1 = (q2, 0, 1/2), A_2 = (0, q1, 0),
///   B_12 = dA_2/dq1 - dA_1/dq2 - [A_1, A_2] = (-1 + q1/2, 1, -q1 q2).
inline AlgebroidModel test_atiyah() {
  auto f = [](const char* t) { return expr::base_field(t, 2); };
  std::vector<std::vector<ScalarField>> A = {{f("q2"), f("0")}, {f("0"), f("q1")}, {f("0.5"), f("0")}};
  std::vector<std::vector<ScalarField>> B = {{f("-1 + 0.5*q1")}, {f("1")}, {f("-q1*q2")}};
  return atiyah_trivial(2, so3_constants(), A, B, "atiyah(so3, test connection)");
}

}  // namespace testing_support
