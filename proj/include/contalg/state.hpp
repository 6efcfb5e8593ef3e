#pragma once

#include <Eigen/Dense>
#include <string>

#include "contalg/errors.hpp"

namespace contalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which bundle a point lives on: E x R (velocities) or E* x R (momenta).
enum class Side { lagrangian, hamiltonian };

inline const char* to_string(Side side) {
  return side == Side::lagrangian ? "lagrangian" : "hamiltonian";
}

/// A point (q, w, s) in local coordinates. `w` holds velocities y^a on the
/// Lagrangian side and momenta p_a on the Hamiltonian side.
struct State {
  Vector q;
  Vector w;
  double s = 0.0;
  Side side = Side::lagrangian;

  int n() const { return static_cast<int>(q.size()); }
  int m() const { return static_cast<int>(w.size()); }
};

/// Time derivative of a State, component by component.
struct StateDerivative {
  Vector dq;
  Vector dw;
  double ds = 0.0;
};

inline void require_dims(const State& x, int n, int m, const char* where) {
  if (x.n() != n || x.m() != m) {
    throw DimensionError(std::string(where) + ": state has (n, m) = (" + std::to_string(x.n()) +
                         ", " + std::to_string(x.m()) + "), expected (" + std::to_string(n) +
                         ", " + std::to_string(m) + ")");
  }
}

inline void require_side(const State& x, Side side, const char* where) {
  if (x.side != side) {
    throw DimensionError(std::string(where) + ": expected a " + to_string(side) + " state, got " +
                         to_string(x.side));
  }
}

/// Flat layout [q, w, s] used by the integrator.
inline Vector pack(const State& x) {
  Vector flat(x.q.size() + x.w.size() + 1);
  flat << x.q, x.w, x.s;
  return flat;
}

inline Vector pack(const StateDerivative& dx) {
  Vector flat(dx.dq.size() + dx.dw.size() + 1);
  flat << dx.dq, dx.dw, dx.ds;
  return flat;
}

inline State unpack(const Vector& flat, int n, int m, Side side) {
  State x;
  x.q = flat.head(n);
  x.w = flat.segment(n, m);
  x.s = flat(n + m);
  x.side = side;
  return x;
}

/// Max-norm distance between two states of the same shape.
inline double max_abs_diff(const State& a, const State& b) {
  double d = std::abs(a.s - b.s);
  if (a.q.size() > 0) d = std::max(d, (a.q - b.q).cwiseAbs().maxCoeff());
  if (a.w.size() > 0) d = std::max(d, (a.w - b.w).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace contalg
