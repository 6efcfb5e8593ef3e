#pragma once

// Classical RK4 with fixed steps or step-doubling error control. Fields map
// a State to its StateDerivative; diagnostics are evaluated at stored
// samples from closed-form identities supplied by the caller.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "contalg/state.hpp"

namespace contalg {

using Field = std::function<StateDerivative(const State&)>;

struct Diagnostic {
  std::string name;
  std::function<double(const State&)> fn;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<std::string> diagnostic_names;
  std::vector<std::vector<double>> diagnostics;  // one row per sample
  int steps = 0;
  bool failed = false;
  double failure_time = 0.0;
  std::string message;

  std::size_t size() const { return times.size(); }
  const State& back() const { return states.back(); }

  /// Largest |value| of a diagnostic column over all samples.
  double max_abs_diagnostic(std::size_t column) const {
    double r = 0.0;
    for (const auto& row : diagnostics) r = std::max(r, std::abs(row[column]));
    return r;
  }
};

namespace detail {

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline Vector flat_rate(const Field& f, const Vector& x, int n, int m, Side side) {
  return pack(f(unpack(x, n, m, side)));
}

inline void record(Trajectory& tr, double t, const State& x, const std::vector<Diagnostic>& diags) {
  tr.times.push_back(t);
  tr.states.push_back(x);
  std::vector<double> row;
  row.reserve(diags.size());
  for (const auto& d : diags) row.push_back(d.fn(x));
  tr.diagnostics.push_back(std::move(row));
}

}  // namespace detail

/// One classical Runge-Kutta step of size h.
inline State rk4_step(const Field& f, const State& x, double h) {
  const int n = x.n();
  const int m = x.m();
  const Vector y = pack(x);
  const Vector k1 = detail::flat_rate(f, y, n, m, x.side);
  const Vector k2 = detail::flat_rate(f, y + 0.5 * h * k1, n, m, x.side);
  const Vector k3 = detail::flat_rate(f, y + 0.5 * h * k2, n, m, x.side);
  const Vector k4 = detail::flat_rate(f, y + h * k3, n, m, x.side);
  return unpack(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), n, m, x.side);
}

/// Fixed-step RK4 on [0, t_end]. The last step is shortened to land on
/// t_end. Samples are stored every `sample_every` steps and at the end.
/// A non-finite state or a library error during a step stops the run; the
/// trajectory up to that point is returned with `failed` set.
inline Trajectory integrate(const Field& f, const State& x0, double t_end, double h,
                            const std::vector<Diagnostic>& diags = {}, int sample_every = 1) {
  if (!(h > 0.0)) throw DomainError("integrate: step h must be positive");
  if (!(t_end > 0.0)) throw DomainError("integrate: t_end must be positive");
  if (sample_every < 1) throw DomainError("integrate: sample_every must be >= 1");

  Trajectory tr;
  for (const auto& d : diags) tr.diagnostic_names.push_back(d.name);
  detail::record(tr, 0.0, x0, diags);

  const double ratio = t_end / h;
  long steps = static_cast<long>(std::ceil(ratio - 1e-9));
  if (steps < 1) steps = 1;

  State x = x0;
  for (long k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * h;
    const double t1 = (k + 1 == steps) ? t_end : static_cast<double>(k + 1) * h;
    try {
      x = rk4_step(f, x, t1 - t0);
    } catch (const Error& e) {
      tr.failed = true;
      tr.failure_time = t0;
      tr.message = e.what();
      return tr;
    }
    ++tr.steps;
    if (!detail::all_finite(pack(x))) {
      tr.failed = true;
      tr.failure_time = t1;
      tr.message = "non-finite state";
      return tr;
    }
    if ((k + 1) % sample_every == 0 || k + 1 == steps) detail::record(tr, t1, x, diags);
  }
  return tr;
}

struct AdaptiveOptions {
  double tol = 1e-8;
  double h0 = 0.0;     // initial step; 0 selects t_end / 100
  double h_min = 0.0;  // 0 selects 1e-12 * max(1, t_end)
};

/// RK4 with step doubling: a step of h is compared against two steps of
/// h/2 and accepted when |x2 - x1|_inf / 15 <= tol * max(1, |x2|_inf).
/// Every accepted step is stored. Throws ConvergenceError when the step
/// falls below h_min.
inline Trajectory adaptive_integrate(const Field& f, const State& x0, double t_end, AdaptiveOptions opt = {},
                                     const std::vector<Diagnostic>& diags = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("adaptive_integrate: tol must be positive");
  if (!(t_end > 0.0)) throw DomainError("adaptive_integrate: t_end must be positive");
  const double h_min = opt.h_min > 0.0 ? opt.h_min : 1e-12 * std::max(1.0, t_end);

  Trajectory tr;
  for (const auto& d : diags) tr.diagnostic_names.push_back(d.name);
  detail::record(tr, 0.0, x0, diags);

  double h = opt.h0 > 0.0 ? opt.h0 : t_end / 100.0;
  double t = 0.0;
  State x = x0;
  while (t < t_end) {
    const bool last = t + h >= t_end;
    const double step = last ? t_end - t : h;
    State coarse;
    State fine;
    try {
      coarse = rk4_step(f, x, step);
      fine = rk4_step(f, rk4_step(f, x, 0.5 * step), 0.5 * step);
    } catch (const Error& e) {
      tr.failed = true;
      tr.failure_time = t;
      tr.message = e.what();
      return tr;
    }
    const Vector a = pack(fine);
    const double err = (a - pack(coarse)).cwiseAbs().maxCoeff() / 15.0;
    const double scale = opt.tol * std::max(1.0, a.cwiseAbs().maxCoeff());
    if (!std::isfinite(err)) {
      tr.failed = true;
      tr.failure_time = t;
      tr.message = "non-finite state";
      return tr;
    }
    const double factor =
        err == 0.0 ? 4.0 : std::clamp(0.9 * std::pow(scale / err, 0.2), 0.1, 4.0);
    if (err <= scale) {
      t = last ? t_end : t + step;
      x = fine;
      tr.steps += 1;
      detail::record(tr, t, x, diags);
      h = std::min(step * factor, t_end);
      if (last) break;
    } else {
      h = step * factor;
      if (h < h_min) {
        throw ConvergenceError("adaptive_integrate: step size underflow at t = " + std::to_string(t));
      }
    }
  }
  return tr;
}

}  // namespace contalg
