#pragma once

// Lie algebroids in a single chart: anchor rho^i_a(q) and structure
// functions C^c_ab(q), the exterior differential of functions, and the
// structure-equation residuals that certify a genuine Lie algebroid.

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "contalg/calculus.hpp"
#include "contalg/errors.hpp"
#include "contalg/expr.hpp"
#include "contalg/random.hpp"
#include "contalg/state.hpp"

namespace contalg {

/// C^c_ab for one point, stored for a < b only. The accessor antisymmetrizes,
/// so C^c_ab = -C^c_ba holds exactly.
class StructureTensor {
public:
  StructureTensor() = default;
  explicit StructureTensor(int m) : m_(m), packed_(static_cast<std::size_t>(m * pairs(m)), 0.0) {}

  static int pairs(int m) { return m * (m - 1) / 2; }

  /// Index of the pair (a, b), a < b, in the packed layout.
  static int pair_index(int m, int a, int b) { return a * m - a * (a + 1) / 2 + (b - a - 1); }

  int rank() const { return m_; }

  double operator()(int c, int a, int b) const {
    if (a == b) return 0.0;
    if (a < b) return packed_[static_cast<std::size_t>(c * pairs(m_) + pair_index(m_, a, b))];
    return -packed_[static_cast<std::size_t>(c * pairs(m_) + pair_index(m_, b, a))];
  }

  /// Sets C^c_ab (and hence C^c_ba = -value). Requires a != b.
  void set(int c, int a, int b, double value) {
    if (a == b) throw DimensionError("StructureTensor::set: diagonal entries are zero");
    if (a > b) {
      std::swap(a, b);
      value = -value;
    }
    packed_[static_cast<std::size_t>(c * pairs(m_) + pair_index(m_, a, b))] = value;
  }

  double max_abs() const {
    double r = 0.0;
    for (double v : packed_) r = std::max(r, std::abs(v));
    return r;
  }

private:
  int m_ = 0;
  std::vector<double> packed_;
};

/// Dense tensor of arbitrary order, row-major.
struct Tensor {
  std::vector<int> dims;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
    std::size_t size = 1;
    for (int k : dims) size *= static_cast<std::size_t>(k);
    data.assign(size, 0.0);
  }

  template <typename... I>
  double& operator()(I... idx) {
    return data[offset({static_cast<int>(idx)...})];
  }
  template <typename... I>
  double operator()(I... idx) const {
    return data[offset({static_cast<int>(idx)...})];
  }

  double max_abs() const {
    double r = 0.0;
    for (double v : data) r = std::max(r, std::abs(v));
    return r;
  }

  /// Multi-index of the largest |entry|; empty for an empty tensor.
  std::vector<int> argmax_abs() const {
    if (data.empty()) return {};
    std::size_t best = 0;
    for (std::size_t k = 1; k < data.size(); ++k) {
      if (std::abs(data[k]) > std::abs(data[best])) best = k;
    }
    std::vector<int> idx(dims.size());
    for (std::size_t d = dims.size(); d-- > 0;) {
      idx[d] = static_cast<int>(best % static_cast<std::size_t>(dims[d]));
      best /= static_cast<std::size_t>(dims[d]);
    }
    return idx;
  }

private:
  std::size_t offset(std::initializer_list<int> idx) const {
    std::size_t off = 0;
    std::size_t d = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dims[d++]) + static_cast<std::size_t>(i);
    return off;
  }
};

/// Local description of a Lie algebroid E -> Q of rank m over an
/// n-dimensional chart. Immutable after construction.
class AlgebroidModel {
public:
  /// anchor: n*m base fields, entry (i, a) at i*m + a.
  /// structure: m * pairs(m) base fields, entry (c, a<b) at c*pairs(m) + pair_index(a, b).
  AlgebroidModel(int n, int m, std::vector<ScalarField> anchor, std::vector<ScalarField> structure,
                 std::string label)
      : n_(n), m_(m), anchor_(std::move(anchor)), structure_(std::move(structure)),
        label_(std::move(label)) {
    if (n < 0 || m < 1) throw DimensionError("algebroid needs n >= 0 and m >= 1");
    if (static_cast<int>(anchor_.size()) != n * m) throw DimensionError("anchor must have n*m entries");
    if (static_cast<int>(structure_.size()) != m * StructureTensor::pairs(m)) {
      throw DimensionError("structure must have m*m*(m-1)/2 entries");
    }
    for (const auto& f : anchor_) check_base_field(f);
    for (const auto& f : structure_) check_base_field(f);
  }

  int n() const { return n_; }
  int m() const { return m_; }
  const std::string& label() const { return label_; }

  const ScalarField& anchor_field(int i, int a) const { return anchor_[static_cast<std::size_t>(i * m_ + a)]; }
  const ScalarField& structure_field(int c, int a, int b) const {
    return structure_[static_cast<std::size_t>(c * StructureTensor::pairs(m_) +
                                               StructureTensor::pair_index(m_, a, b))];
  }

  /// rho^i_a(q) as an n x m matrix.
  Matrix anchor(const Vector& q) const {
    check_q(q);
    Matrix rho(n_, m_);
    for (int i = 0; i < n_; ++i) {
      for (int a = 0; a < m_; ++a) rho(i, a) = eval_value(anchor_field(i, a), q);
    }
    return rho;
  }

  StructureTensor structure(const Vector& q) const {
    check_q(q);
    StructureTensor c(m_);
    for (int g = 0; g < m_; ++g) {
      for (int a = 0; a < m_; ++a) {
        for (int b = a + 1; b < m_; ++b) c.set(g, a, b, eval_value(structure_field(g, a, b), q));
      }
    }
    return c;
  }

  /// d rho^i_a / dq^j, entry [j](i, a).
  std::vector<Matrix> anchor_derivatives(const Vector& q) const {
    check_q(q);
    std::vector<Matrix> d(static_cast<std::size_t>(n_), Matrix::Zero(n_, m_));
    for (int i = 0; i < n_; ++i) {
      for (int a = 0; a < m_; ++a) {
        const ScalarField& f = anchor_field(i, a);
        if (f.constant_value()) continue;
        const Vector g = f.gradient_at(q);
        for (int j = 0; j < n_; ++j) d[static_cast<std::size_t>(j)](i, a) = g(j);
      }
    }
    return d;
  }

  /// d C^c_ab / dq^j, entry [j](c, a, b).
  std::vector<StructureTensor> structure_derivatives(const Vector& q) const {
    check_q(q);
    std::vector<StructureTensor> d(static_cast<std::size_t>(n_), StructureTensor(m_));
    for (int g = 0; g < m_; ++g) {
      for (int a = 0; a < m_; ++a) {
        for (int b = a + 1; b < m_; ++b) {
          const ScalarField& f = structure_field(g, a, b);
          if (f.constant_value()) continue;
          const Vector grad = f.gradient_at(q);
          for (int j = 0; j < n_; ++j) d[static_cast<std::size_t>(j)].set(g, a, b, grad(j));
        }
      }
    }
    return d;
  }

  void check_q(const Vector& q) const {
    if (q.size() != n_) {
      throw DimensionError("base point has " + std::to_string(q.size()) + " coordinates, model '" +
                           label_ + "' expects " + std::to_string(n_));
    }
  }

private:
  static double eval_value(const ScalarField& f, const Vector& q) {
    if (auto c = f.constant_value()) return *c;
    return f.value_at(q);
  }

  void check_base_field(const ScalarField& f) const {
    if (!f.valid() || f.n() != n_ || f.m() != 0) {
      throw DimensionError("anchor/structure entries must be fields on the base with n = " +
                           std::to_string(n_));
    }
  }

  int n_;
  int m_;
  std::vector<ScalarField> anchor_;
  std::vector<ScalarField> structure_;
  std::string label_;
};

/// anchor_matrix under its operation name.
inline Matrix anchor_matrix(const AlgebroidModel& model, const Vector& q) { return model.anchor(q); }
inline StructureTensor structure_tensor(const AlgebroidModel& model, const Vector& q) {
  return model.structure(q);
}

/// (d^E f)_a = rho^i_a df/dq^i for a function f on the base.
inline Vector d_e_function(const AlgebroidModel& model, const ScalarField& f, const Vector& q) {
  if (f.m() != 0 || f.n() != model.n()) {
    throw DimensionError("d_e_function expects a function of q only");
  }
  const Matrix rho = model.anchor(q);
  if (model.n() == 0) return Vector::Zero(model.m());
  return rho.transpose() * f.gradient_at(q);
}

struct StructureResiduals {
  Tensor jacobi;  // [nu, a, b, c]: sum over cyclic (a, b, c) of rho dC + C C
  Tensor anchor;  // [i, a, b]: rho_a(rho^i_b) - rho_b(rho^i_a) - rho^i_c C^c_ab

  double max_abs() const { return std::max(jacobi.max_abs(), anchor.max_abs()); }
};

inline StructureResiduals structure_residuals(const AlgebroidModel& model, const Vector& q) {
  const int n = model.n();
  const int m = model.m();
  const Matrix rho = model.anchor(q);
  const StructureTensor c = model.structure(q);
  const auto drho = model.anchor_derivatives(q);
  const auto dc = model.structure_derivatives(q);

  // rho_a(C^nu_bc) = rho^i_a dC^nu_bc/dq^i
  auto rho_dc = [&](int a, int nu, int b, int g) {
    double r = 0.0;
    for (int i = 0; i < n; ++i) r += rho(i, a) * dc[static_cast<std::size_t>(i)](nu, b, g);
    return r;
  };
  auto cc = [&](int nu, int a, int b, int g) {
    double r = 0.0;
    for (int mu = 0; mu < m; ++mu) r += c(nu, a, mu) * c(mu, b, g);
    return r;
  };

  StructureResiduals out{Tensor({m, m, m, m}), Tensor({n, m, m})};
  for (int nu = 0; nu < m; ++nu) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        for (int g = 0; g < m; ++g) {
          out.jacobi(nu, a, b, g) = rho_dc(a, nu, b, g) + cc(nu, a, b, g) + rho_dc(b, nu, g, a) +
                                    cc(nu, b, g, a) + rho_dc(g, nu, a, b) + cc(nu, g, a, b);
        }
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        double r = 0.0;
        for (int j = 0; j < n; ++j) {
          r += rho(j, a) * drho[static_cast<std::size_t>(j)](i, b) -
               rho(j, b) * drho[static_cast<std::size_t>(j)](i, a);
        }
        for (int g = 0; g < m; ++g) r -= rho(i, g) * c(g, a, b);
        out.anchor(i, a, b) = r;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builtin algebroids

/// Points at which builtin constructors validate the structure equations.
struct ValidationOptions {
  int samples = 8;
  double radius = 1.0;
  double tolerance = 1e-10;
  std::uint64_t seed = 20240611;
  bool enabled = true;  // false builds the model unchecked, e.g. to report residuals
};

/// Throws StructureError naming the worst residual entry if the structure
/// equations fail at any sampled point of [-radius, radius]^n.
inline void validate(const AlgebroidModel& model, const ValidationOptions& opt = {}) {
  if (!opt.enabled) return;
  Sampler sampler(opt.seed);
  const int samples = model.n() == 0 ? 1 : opt.samples;
  for (int k = 0; k < samples; ++k) {
    const Vector q = sampler.uniform_vector(model.n(), -opt.radius, opt.radius);
    const StructureResiduals r = structure_residuals(model, q);
    auto report = [&](const Tensor& t, const char* which, const char* names) {
      if (t.max_abs() < opt.tolerance) return;
      const auto idx = t.argmax_abs();
      std::string where;
      for (std::size_t d = 0; d < idx.size(); ++d) {
        where += (d ? ", " : "") + std::string(1, names[d]) + "=" + std::to_string(idx[d] + 1);
      }
      throw StructureError("algebroid '" + model.label() + "': " + which +
                           " structure equation violated at (" + where + ") with residual " +
                           std::to_string(t.max_abs()));
    };
    report(r.jacobi, "Jacobi-type", "vabc");
    report(r.anchor, "anchor", "iab");
  }
}

/// C^c_ab = epsilon_abc for so(3) in the basis of infinitesimal rotations.
inline StructureTensor so3_constants() {
  StructureTensor c(3);
  c.set(2, 0, 1, 1.0);
  c.set(0, 1, 2, 1.0);
  c.set(1, 2, 0, 1.0);
  return c;
}

namespace detail {

inline std::vector<ScalarField> constant_structure(int n, const StructureTensor& c) {
  const int m = c.rank();
  std::vector<ScalarField> out;
  out.reserve(static_cast<std::size_t>(m * StructureTensor::pairs(m)));
  for (int g = 0; g < m; ++g) {
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) out.push_back(ScalarField::constant(n, 0, c(g, a, b)));
    }
  }
  return out;
}

}  // namespace detail

/// TQ with rho = id and vanishing brackets of coordinate fields.
inline AlgebroidModel tangent_bundle(int n) {
  if (n < 1) throw DimensionError("tangent_bundle needs n >= 1");
  std::vector<ScalarField> anchor;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a) anchor.push_back(ScalarField::constant(n, 0, i == a ? 1.0 : 0.0));
  }
  return AlgebroidModel(n, n, std::move(anchor), detail::constant_structure(n, StructureTensor(n)),
                        "tangent_bundle(" + std::to_string(n) + ")");
}

/// A Lie algebra as an algebroid over a point (n = 0, rho = 0).
inline AlgebroidModel lie_algebra(const StructureTensor& constants, std::string label = "lie_algebra",
                                  const ValidationOptions& opt = {}) {
  AlgebroidModel model(0, constants.rank(), {}, detail::constant_structure(0, constants),
                       std::move(label));
  validate(model, opt);
  return model;
}

/// Action algebroid Q x g for an action with infinitesimal generators
/// generators[a][i] = (e_a)_Q^i(q); the anchor is rho(e_a) = -(e_a)_Q.
inline AlgebroidModel action_algebroid(int n, const StructureTensor& constants,
                                       const std::vector<std::vector<ScalarField>>& generators,
                                       std::string label = "action_algebroid",
                                       const ValidationOptions& opt = {}) {
  const int m = constants.rank();
  if (static_cast<int>(generators.size()) != m) throw DimensionError("need one generator per basis element");
  std::vector<ScalarField> anchor;
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < m; ++a) {
      const auto& gen = generators[static_cast<std::size_t>(a)];
      if (static_cast<int>(gen.size()) != n) throw DimensionError("generator field must have n components");
      const ScalarField xi = gen[static_cast<std::size_t>(i)];
      if (auto c = xi.constant_value()) {
        anchor.push_back(ScalarField::constant(n, 0, -*c));
      } else {
        auto body = xi.dual_body();
        if (!body) throw Error("action_algebroid: generator fields must be expressions or native fields");
        anchor.push_back(ScalarField::native(
            n, 0,
            [body](auto x) {
              using T = typename decltype(x)::value_type;
              return T(-body->eval(x));
            },
            "-(" + xi.describe() + ")"));
      }
    }
  }
  AlgebroidModel model(n, m, std::move(anchor), detail::constant_structure(n, constants), std::move(label));
  validate(model, opt);
  return model;
}

/// so(3) acting on R^3 by rotations, xi_Q(q) = xi x q; rho(e_a)(q) = -(e_a x q).
inline AlgebroidModel action_so3_on_r3() {
  const expr::Context ctx{3, 0, expr::Chart::base, {}};
  auto f = [&](const char* text) { return expr::to_scalar_field(expr::parse(text, ctx)); };
  auto zero = ScalarField::constant(3, 0, 0.0);
  // e1 x q = (0, -q3, q2), e2 x q = (q3, 0, -q1), e3 x q = (-q2, q1, 0)
  std::vector<std::vector<ScalarField>> gens = {
      {zero, f("-q3"), f("q2")},
      {f("q3"), zero, f("-q1")},
      {f("-q2"), f("q1"), zero},
  };
  return action_algebroid(3, so3_constants(), gens, "action_algebroid(so3 on R3)");
}

/// Atiyah algebroid TQ/G of a trivial principal bundle U x G -> U in the
/// basis {e_i = horizontal lift of d/dq^i, e^_A}, ordered e_1..e_k, e^_1..e^_d.
///
///   rho(e_i) = d/dq^i,  rho(e^_A) = 0
///   [e_i, e_j]   = -B^C_ij e^_C
///   [e_i, e^_B]  =  c^C_BD A^D_i e^_C
///   [e^_A, e^_B] =  c^C_AB e^_C
///
/// connection[A][i] = A^A_i(q); curvature[A][pair(i<j)] = B^A_ij(q). The
/// structure equations hold iff B_ij = dA_j/dq^i - dA_i/dq^j - [A_i, A_j].
inline AlgebroidModel atiyah_trivial(int k, const StructureTensor& constants,
                                     const std::vector<std::vector<ScalarField>>& connection,
                                     const std::vector<std::vector<ScalarField>>& curvature,
                                     std::string label = "atiyah_trivial",
                                     const ValidationOptions& opt = {}) {
  const int d = constants.rank();
  const int m = k + d;
  if (static_cast<int>(connection.size()) != d || static_cast<int>(curvature.size()) != d) {
    throw DimensionError("atiyah_trivial: connection and curvature need one entry per Lie algebra element");
  }
  for (const auto& row : connection) {
    if (static_cast<int>(row.size()) != k) throw DimensionError("atiyah_trivial: connection rows need k entries");
  }
  for (const auto& row : curvature) {
    if (static_cast<int>(row.size()) != StructureTensor::pairs(k)) {
      throw DimensionError("atiyah_trivial: curvature rows need k(k-1)/2 entries");
    }
  }

  std::vector<ScalarField> anchor;
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < m; ++a) anchor.push_back(ScalarField::constant(k, 0, a == i ? 1.0 : 0.0));
  }

  auto zero = ScalarField::constant(k, 0, 0.0);
  // Linear combination sum_j coeff_j * field_j as one base field.
  auto combine = [k](std::vector<std::pair<double, ScalarField>> terms, std::string label) {
    std::erase_if(terms, [](const auto& t) { return t.first == 0.0; });
    if (terms.empty()) return ScalarField::constant(k, 0, 0.0);
    double constant = 0.0;
    std::vector<std::pair<double, std::shared_ptr<const DualBody>>> varying;
    for (auto& t : terms) {
      if (auto c = t.second.constant_value()) {
        constant += t.first * *c;
      } else if (auto body = t.second.dual_body()) {
        varying.emplace_back(t.first, std::move(body));
      } else {
        throw Error("atiyah_trivial: connection/curvature fields must be expressions or native fields");
      }
    }
    if (varying.empty()) return ScalarField::constant(k, 0, constant);
    return ScalarField::native(
        k, 0,
        [constant, varying](auto x) {
          using T = typename decltype(x)::value_type;
          T r(constant);
          for (const auto& [coef, f] : varying) {
            r = r + coef * f->eval(x);
          }
          return r;
        },
        std::move(label));
  };

  std::vector<ScalarField> structure;
  for (int g = 0; g < m; ++g) {
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        if (g < k) {
          structure.push_back(zero);  // brackets have no horizontal part
          continue;
        }
        const int C = g - k;
        if (b < k) {
          // [e_a, e_b] = -B^C_ab e^_C
          structure.push_back(combine({{-1.0, curvature[static_cast<std::size_t>(C)][static_cast<std::size_t>(
                                                  StructureTensor::pair_index(k, a, b))]}},
                                      "-B"));
        } else if (a < k) {
          // [e_a, e^_B] = c^C_BD A^D_a e^_C
          const int B = b - k;
          std::vector<std::pair<double, ScalarField>> terms;
          for (int D = 0; D < d; ++D) {
            terms.emplace_back(constants(C, B, D), connection[static_cast<std::size_t>(D)][static_cast<std::size_t>(a)]);
          }
          structure.push_back(combine(std::move(terms), "c.A"));
        } else {
          structure.push_back(ScalarField::constant(k, 0, constants(C, a - k, b - k)));
        }
      }
    }
  }
  AlgebroidModel model(k, m, std::move(anchor), std::move(structure), std::move(label));
  validate(model, opt);
  return model;
}

}  // namespace contalg
