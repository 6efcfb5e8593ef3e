#pragma once

// Scalar fields f(q, w, s) and their first and second partial derivatives.
//
// Derivatives come from forward-mode dual numbers (dual.hpp): first
// partials from one Dual1 sweep per variable, second partials from Dual2
// sweeps with one variable seeded on each nesting level. Finite differences
// appear only in fd_crosscheck, which audits the dual-number results.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "contalg/dual.hpp"
#include "contalg/state.hpp"

namespace contalg {

/// Which derivative blocks to compute. The value is always returned.
struct DerivativeRequest {
  bool grad_q = false;
  bool grad_w = false;
  bool d_s = false;
  bool hess_ww = false;
  bool mixed_qw = false;
  bool mixed_sw = false;
  bool hess_qq = false;  // base Hessian, used for 1-jets of functions on Q

  static DerivativeRequest value_only() { return {}; }
  static DerivativeRequest first() { return {true, true, true, false, false, false, false}; }
  static DerivativeRequest all() { return {true, true, true, true, true, true, false}; }
  static DerivativeRequest base_second() {
    DerivativeRequest r;
    r.grad_q = true;
    r.hess_qq = true;
    return r;
  }

  bool any_fiber_second() const { return hess_ww || mixed_qw || mixed_sw; }
};

/// Value and requested partials. Blocks that were not requested are empty.
struct DerivativeBundle {
  double value = 0.0;
  Vector grad_q;    // n
  Vector grad_w;    // m
  double d_s = 0.0;
  Matrix hess_ww;   // m x m, symmetric
  Matrix mixed_qw;  // n x m, entry (i, a) = d2f / dq^i dw^a
  Vector mixed_sw;  // m
  Matrix hess_qq;   // n x n
};

/// Evaluation rule behind a ScalarField.
class FieldBody {
public:
  virtual ~FieldBody() = default;
  virtual DerivativeBundle evaluate(const Vector& q, const Vector& w, double s,
                                    const DerivativeRequest& request) const = 0;
  virtual std::string describe() const = 0;
};

/// A body that can be evaluated over double, Dual1 and Dual2. Derivatives
/// are assembled from seeded sweeps over the flat input x = [q, w, s].
class DualBody : public FieldBody {
public:
  DualBody(int n, int m) : n_(n), m_(m) {}

  virtual double eval(std::span<const double> x) const = 0;
  virtual Dual1 eval(std::span<const Dual1> x) const = 0;
  virtual Dual2 eval(std::span<const Dual2> x) const = 0;

  DerivativeBundle evaluate(const Vector& q, const Vector& w, double s,
                            const DerivativeRequest& request) const override {
    const int n = n_;
    const int m = m_;
    const int nv = n + m + 1;
    std::vector<double> x(static_cast<std::size_t>(nv));
    for (int i = 0; i < n; ++i) x[i] = q(i);
    for (int a = 0; a < m; ++a) x[n + a] = w(a);
    x[n + m] = s;

    DerivativeBundle out;
    if (request.grad_q) out.grad_q = Vector::Zero(n);
    if (request.grad_w) out.grad_w = Vector::Zero(m);
    if (request.hess_ww) out.hess_ww = Matrix::Zero(m, m);
    if (request.mixed_qw) out.mixed_qw = Matrix::Zero(n, m);
    if (request.mixed_sw) out.mixed_sw = Vector::Zero(m);
    if (request.hess_qq) out.hess_qq = Matrix::Zero(n, n);

    auto store_first = [&](int k, double dk) {
      if (k < n) {
        if (request.grad_q) out.grad_q(k) = dk;
      } else if (k < n + m) {
        if (request.grad_w) out.grad_w(k - n) = dk;
      } else if (request.d_s) {
        out.d_s = dk;
      }
    };

    bool have_value = false;
    bool first_done = false;

    if (request.any_fiber_second() && m > 0) {
      // Outer seed on w_b; inner seed on every variable the blocks need.
      std::vector<Dual2> xd(x.size());
      for (int b = 0; b < m; ++b) {
        for (int k = 0; k < nv; ++k) {
          const bool is_w = k >= n && k < n + m;
          if (is_w && k - n > b) continue;
          for (int j = 0; j < nv; ++j) xd[j] = Dual2(Dual1(x[j], j == k ? 1.0 : 0.0), Dual1(0.0, 0.0));
          xd[n + b].d = Dual1(1.0, 0.0);
          if (k == n + b) xd[k].d = Dual1(1.0, 0.0);
          const Dual2 r = eval(std::span<const Dual2>(xd));
          out.value = r.v.v;
          have_value = true;
          store_first(k, r.v.d);
          const double mixed = r.d.d;
          if (k < n) {
            if (request.mixed_qw) out.mixed_qw(k, b) = mixed;
          } else if (is_w) {
            if (request.hess_ww) {
              out.hess_ww(k - n, b) = mixed;
              out.hess_ww(b, k - n) = mixed;
            }
          } else if (request.mixed_sw) {
            out.mixed_sw(b) = mixed;
          }
        }
      }
      first_done = true;
    }

    if (!first_done && (request.grad_q || request.grad_w || request.d_s)) {
      std::vector<Dual1> xd(x.size());
      for (int k = 0; k < nv; ++k) {
        const bool wanted = (k < n && request.grad_q) || (k >= n && k < n + m && request.grad_w) ||
                            (k == n + m && request.d_s);
        if (!wanted) continue;
        for (int j = 0; j < nv; ++j) xd[j] = Dual1(x[j], j == k ? 1.0 : 0.0);
        const Dual1 r = eval(std::span<const Dual1>(xd));
        out.value = r.v;
        have_value = true;
        store_first(k, r.d);
      }
    }

    if (request.hess_qq) {
      std::vector<Dual2> xd(x.size());
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          for (int k = 0; k < nv; ++k) xd[k] = Dual2(Dual1(x[k], k == i ? 1.0 : 0.0), Dual1(0.0, 0.0));
          xd[j].d = Dual1(1.0, 0.0);
          const Dual2 r = eval(std::span<const Dual2>(xd));
          out.value = r.v.v;
          have_value = true;
          if (request.grad_q) out.grad_q(i) = r.v.d;
          out.hess_qq(i, j) = r.d.d;
          out.hess_qq(j, i) = r.d.d;
        }
      }
    }

    if (!have_value) out.value = eval(std::span<const double>(x));
    return out;
  }

  int n() const { return n_; }
  int m() const { return m_; }

private:
  int n_;
  int m_;
};

/// Wraps a generic callable `f(std::span<const T>) -> T` usable with
/// T = double, Dual1 and Dual2. Used for builtin fields that have no
/// expression-string form.
template <typename F>
class NativeBody final : public DualBody {
public:
  NativeBody(int n, int m, F f, std::string label)
      : DualBody(n, m), f_(std::move(f)), label_(std::move(label)) {}

  double eval(std::span<const double> x) const override { return f_(x); }
  Dual1 eval(std::span<const Dual1> x) const override { return f_(x); }
  Dual2 eval(std::span<const Dual2> x) const override { return f_(x); }
  std::string describe() const override { return label_; }

private:
  F f_;
  std::string label_;
};

class ConstantBody final : public FieldBody {
public:
  ConstantBody(int n, int m, double c) : n_(n), m_(m), c_(c) {}

  DerivativeBundle evaluate(const Vector&, const Vector&, double,
                            const DerivativeRequest& request) const override {
    DerivativeBundle out;
    out.value = c_;
    if (request.grad_q) out.grad_q = Vector::Zero(n_);
    if (request.grad_w) out.grad_w = Vector::Zero(m_);
    if (request.hess_ww) out.hess_ww = Matrix::Zero(m_, m_);
    if (request.mixed_qw) out.mixed_qw = Matrix::Zero(n_, m_);
    if (request.mixed_sw) out.mixed_sw = Vector::Zero(m_);
    if (request.hess_qq) out.hess_qq = Matrix::Zero(n_, n_);
    return out;
  }
  std::string describe() const override {
    return "constant " + std::to_string(c_);
  }
  double constant() const { return c_; }

private:
  int n_;
  int m_;
  double c_;
};

/// A smooth real function of (q, w, s) with arity (n, m). Fields on the base
/// Q alone have m = 0 and ignore s. Copies share the immutable body.
class ScalarField {
public:
  ScalarField() = default;
  ScalarField(int n, int m, std::shared_ptr<const FieldBody> body)
      : n_(n), m_(m), body_(std::move(body)) {}

  static ScalarField constant(int n, int m, double c) {
    return {n, m, std::make_shared<ConstantBody>(n, m, c)};
  }

  template <typename F>
  static ScalarField native(int n, int m, F f, std::string label) {
    return {n, m, std::make_shared<NativeBody<F>>(n, m, std::move(f), std::move(label))};
  }

  int n() const { return n_; }
  int m() const { return m_; }
  bool valid() const { return body_ != nullptr; }
  const FieldBody& body() const { return *body_; }
  std::string describe() const { return body_ ? body_->describe() : "<empty>"; }

  /// The body as a dual-number evaluator, or nullptr if it is not one.
  std::shared_ptr<const DualBody> dual_body() const {
    return std::dynamic_pointer_cast<const DualBody>(body_);
  }

  /// The value of a constant field, if this is one.
  std::optional<double> constant_value() const {
    auto* c = dynamic_cast<const ConstantBody*>(body_.get());
    if (c == nullptr) return std::nullopt;
    return c->constant();
  }

  DerivativeBundle eval(const Vector& q, const Vector& w, double s,
                        const DerivativeRequest& request) const {
    check_arity(q, w);
    return body_->evaluate(q, w, s, request);
  }

  DerivativeBundle eval(const State& x, const DerivativeRequest& request) const {
    return eval(x.q, x.w, x.s, request);
  }

  double value(const Vector& q, const Vector& w, double s) const {
    return eval(q, w, s, DerivativeRequest::value_only()).value;
  }
  double value(const State& x) const { return value(x.q, x.w, x.s); }

  /// Convenience for base fields (m = 0).
  double value_at(const Vector& q) const { return value(q, Vector(), 0.0); }
  Vector gradient_at(const Vector& q) const {
    DerivativeRequest r;
    r.grad_q = true;
    return eval(q, Vector(), 0.0, r).grad_q;
  }

private:
  void check_arity(const Vector& q, const Vector& w) const {
    if (!body_) throw Error("evaluation of an empty ScalarField");
    if (q.size() != n_ || w.size() != m_) {
      throw DimensionError("ScalarField of arity (" + std::to_string(n_) + ", " +
                           std::to_string(m_) + ") evaluated at (" + std::to_string(q.size()) +
                           ", " + std::to_string(w.size()) + ")");
    }
  }

  int n_ = 0;
  int m_ = 0;
  std::shared_ptr<const FieldBody> body_;
};

/// eval_with_derivatives under its operation name.
inline DerivativeBundle eval_with_derivatives(const ScalarField& f, const State& x,
                                              const DerivativeRequest& request) {
  return f.eval(x, request);
}

/// Worst discrepancy between the dual-number partials of `f` at `x` and
/// central finite differences. First partials are differenced from values;
/// second partials from the dual-number fiber gradient. Each variable uses
/// step h * max(1, |x_k|). Errors are measured relative to max(1, |fd|).
inline double fd_crosscheck(const ScalarField& f, const State& x, double h = 1e-5) {
  if (!(h > 0.0)) throw Error("fd_crosscheck: step must be positive");
  const int n = f.n();
  const int m = f.m();
  const bool has_s = m > 0;
  const DerivativeBundle ad = f.eval(x, m > 0 ? DerivativeRequest::all() : [] {
    DerivativeRequest r;
    r.grad_q = true;
    return r;
  }());

  Vector flat = pack(x);
  const int nv = n + m + (has_s ? 1 : 0);
  auto at = [&](const Vector& v) { return unpack(v, n, m, x.side); };
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };

  double worst = 0.0;
  for (int k = 0; k < nv; ++k) {
    const double hk = h * std::max(1.0, std::abs(flat(k)));
    Vector plus = flat;
    Vector minus = flat;
    plus(k) += hk;
    minus(k) -= hk;
    const State xp = at(plus);
    const State xm = at(minus);
    const double fd = (f.value(xp) - f.value(xm)) / (2.0 * hk);
    double exact;
    if (k < n) {
      exact = ad.grad_q(k);
    } else if (k < n + m) {
      exact = ad.grad_w(k - n);
    } else {
      exact = ad.d_s;
    }
    worst = std::max(worst, rel(exact, fd));

    if (m > 0) {
      DerivativeRequest g;
      g.grad_w = true;
      const Vector gp = f.eval(xp, g).grad_w;
      const Vector gm = f.eval(xm, g).grad_w;
      const Vector dg = (gp - gm) / (2.0 * hk);
      for (int b = 0; b < m; ++b) {
        double second;
        if (k < n) {
          second = ad.mixed_qw(k, b);
        } else if (k < n + m) {
          second = ad.hess_ww(k - n, b);
        } else {
          second = ad.mixed_sw(b);
        }
        worst = std::max(worst, rel(second, dg(b)));
      }
    }
  }
  return worst;
}

}  // namespace contalg
