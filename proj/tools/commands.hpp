#pragma once

// Subcommands of the contalg tool. Each returns a process exit code:
// 0 ok, 1 check failure, 2 config/parse error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "contalg/contalg.hpp"
#include "contalg/scenario.hpp"

namespace contalg::cli {

enum Exit { ok = 0, check_failed = 1, config_error = 2, numerical_failure = 3 };

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw ConfigError(path.string() + ": cannot open for writing");
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k) out_ << ',';
      out_ << cells[k];
    }
    out_ << '\n';
  }

  void write_numbers(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt17(v));
    write_row(cells);
  }

private:
  std::ofstream out_;
};

class Report {
public:
  explicit Report(bool quiet) : quiet_(quiet) {}

  void line(const std::string& text) const {
    if (!quiet_) std::cout << text << '\n';
  }

  /// Records a named check and prints its row.
  bool check(const std::string& name, double value, double tolerance, const std::string& note = "") {
    const bool pass = value <= tolerance;
    passed_ = passed_ && pass;
    line((pass ? "PASS  " : "FAIL  ") + name + "  max=" + fmt_short(value) + "  tol=" + fmt_short(tolerance) +
         (note.empty() ? "" : "  (" + note + ")"));
    return pass;
  }

  bool passed() const { return passed_; }

private:
  bool quiet_;
  bool passed_ = true;
};

inline std::filesystem::path prepare_out(const Options& opt) {
  std::filesystem::path dir(opt.out);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<std::string> state_columns(const AlgebroidModel& model, Side side) {
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < model.n(); ++i) cols.push_back("q" + std::to_string(i + 1));
  const char* w = side == Side::lagrangian ? "y" : "p";
  for (int a = 0; a < model.m(); ++a) cols.push_back(w + std::to_string(a + 1));
  cols.push_back("s");
  return cols;
}

// Names understood by `check`; all other check names refer to trajectory
// diagnostic columns and are used by `simulate`.
inline const std::set<std::string>& identity_checks() {
  static const std::set<std::string> names{
      "structure_jacobi", "structure_anchor", "antisymmetry", "fd_crosscheck", "hessian_symmetry",
      "regularity",       "reeb",             "lagrangian_section", "energy_balance",
      "hamiltonian_section", "dissipation",  "evolution_relation"};
  return names;
}

// ---------------------------------------------------------------- simulate

inline int simulate(const Options& opt) {
  const Scenario sc = load_scenario_file(opt.config);
  if (!sc.integrator) throw ConfigError("integrator: missing");
  const IntegratorSpec& in = *sc.integrator;
  Report report(opt.quiet);

  Field field;
  std::vector<Diagnostic> diags;
  std::optional<ContactLagrangianSystem> lag;
  std::optional<ContactHamiltonianSystem> ham;
  if (sc.side == Side::lagrangian) {
    lag.emplace(sc.lagrangian_system());
    const ContactLagrangianSystem& s = *lag;
    field = [&s](const State& x) { return herglotz_field(s, x); };
    diags.push_back({"E_L", [&s](const State& x) { return energy(s, x); }});
    diags.push_back({"ds_residual", [&s](const State& x) {
                       return herglotz_field(s, x).ds - s.lagrangian().value(x);
                     }});
    diags.push_back({"energy_residual", [&s](const State& x) { return energy_balance_residual(s, x); }});
  } else {
    ham.emplace(sc.hamiltonian_system());
    const ContactHamiltonianSystem& s = *ham;
    field = [&s](const State& x) { return hamilton_field(s, x); };
    diags.push_back({"H", [&s](const State& x) { return s.hamiltonian().value(x); }});
    diags.push_back({"dissipation_residual", [&s](const State& x) { return dissipation_residual(s, x); }});
  }

  std::set<std::string> diag_names;
  for (const auto& d : diags) diag_names.insert(d.name);
  for (const auto& c : sc.checks) {
    if (!diag_names.count(c.name) && !identity_checks().count(c.name)) {
      throw ConfigError("checks: unknown check '" + c.name + "'");
    }
  }

  const Trajectory tr = in.method == "rk4"
                            ? integrate(field, sc.initial, in.t_end, in.h, diags, in.sample_every)
                            : adaptive_integrate(field, sc.initial, in.t_end, AdaptiveOptions{in.tol}, diags);

  const auto dir = prepare_out(opt);
  std::vector<std::string> header = state_columns(sc.algebroid(), sc.side);
  for (const auto& name : tr.diagnostic_names) header.push_back(name);
  CsvWriter csv(dir / "trajectory.csv", header);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    const State& x = tr.states[k];
    for (int i = 0; i < x.n(); ++i) row.push_back(x.q(i));
    for (int a = 0; a < x.m(); ++a) row.push_back(x.w(a));
    row.push_back(x.s);
    row.insert(row.end(), tr.diagnostics[k].begin(), tr.diagnostics[k].end());
    csv.write_numbers(row);
  }

  report.line("scenario " + sc.name + ": " + std::to_string(tr.steps) + " steps, " + std::to_string(tr.size()) +
              " samples");
  for (std::size_t c = 0; c < tr.diagnostic_names.size(); ++c) {
    report.line("  max |" + tr.diagnostic_names[c] + "| = " + fmt_short(tr.max_abs_diagnostic(c)));
  }
  if (tr.failed) {
    std::cerr << "numerical failure at t = " << fmt17(tr.failure_time) << ": " << tr.message << '\n';
    return numerical_failure;
  }
  for (const auto& c : sc.checks) {
    for (std::size_t col = 0; col < tr.diagnostic_names.size(); ++col) {
      if (tr.diagnostic_names[col] == c.name) report.check(c.name, tr.max_abs_diagnostic(col), c.tolerance);
    }
  }
  return report.passed() ? ok : check_failed;
}

// ------------------------------------------------------------------- check

inline int check(const Options& opt) {
  Scenario sc = load_scenario_file(opt.config, /*validated=*/false);
  if (opt.seed) sc.seed = *opt.seed;
  Report report(opt.quiet);
  const AlgebroidModel& model = sc.algebroid();

  std::set<std::string> selected;
  for (const auto& c : sc.checks) {
    if (identity_checks().count(c.name)) selected.insert(c.name);
  }
  auto wanted = [&](const std::string& name) { return selected.empty() || selected.count(name) > 0; };

  Sampler sampler(sc.seed);
  std::vector<State> states;
  for (int k = 0; k < sc.sampling.samples; ++k) states.push_back(sampler.around(sc.initial, sc.sampling.radius));

  struct Row {
    std::string name;
    double value;
    double tolerance;
    std::string note;
  };
  std::vector<Row> rows;
  auto add = [&](const std::string& name, double fallback_tol, double value, std::string note = "") {
    if (!wanted(name)) return;
    rows.push_back({name, value, sc.tolerance(name, fallback_tol), std::move(note)});
  };

  // structure equations and antisymmetry over the sampled base points
  double jac = 0.0;
  double anc = 0.0;
  double anti = 0.0;
  const std::size_t base_points = model.n() == 0 ? 1 : states.size();
  for (std::size_t k = 0; k < base_points; ++k) {
    const Vector& q = states[k].q;
    const StructureResiduals r = structure_residuals(model, q);
    jac = std::max(jac, r.jacobi.max_abs());
    anc = std::max(anc, r.anchor.max_abs());
    const StructureTensor C = model.structure(q);
    for (int g = 0; g < model.m(); ++g) {
      for (int a = 0; a < model.m(); ++a) {
        for (int b = 0; b < model.m(); ++b) anti = std::max(anti, std::abs(C(g, a, b) + C(g, b, a)));
      }
    }
  }
  add("structure_jacobi", 1e-10, jac);
  add("structure_anchor", 1e-10, anc, model.n() == 0 ? "n = 0, trivially zero" : "");
  add("antisymmetry", 0.0, anti);

  double fd = 0.0;
  double sym = 0.0;
  for (const State& x : states) {
    fd = std::max(fd, fd_crosscheck(sc.field, x));
    DerivativeRequest r;
    r.hess_ww = true;
    const Matrix W = sc.field.eval(x, r).hess_ww;
    if (W.size() > 0) sym = std::max(sym, (W - W.transpose()).cwiseAbs().maxCoeff());
  }
  add("fd_crosscheck", 1e-6, fd);
  add("hessian_symmetry", 0.0, sym);

  if (sc.side == Side::lagrangian) {
    const ContactLagrangianSystem sys = sc.lagrangian_system();
    int irregular = 0;
    double reeb = 0.0;
    double section = 0.0;
    double balance = 0.0;
    for (const State& x : states) {
      if (!regularity(sys, x).is_regular) {
        ++irregular;
        continue;
      }
      const ReebResult rr = reeb_coeffs(sys, x);
      reeb = std::max({reeb, std::abs(rr.eta_check), rr.d_eta_check});
      section = std::max(section, verify_lagrangian_section(sys, x).max_abs());
      balance = std::max(balance, std::abs(energy_balance_residual(sys, x)) / (1.0 + std::abs(energy(sys, x))));
    }
    add("regularity", 0.0, irregular, "count of non-regular samples");
    add("reeb", 1e-12, reeb);
    add("lagrangian_section", 1e-9, section);
    add("energy_balance", 1e-9, balance, "relative to 1 + |E_L|");
  } else {
    const ContactHamiltonianSystem sys = sc.hamiltonian_system();
    double section = 0.0;
    double diss = 0.0;
    double rel = 0.0;
    for (const State& x : states) {
      section = std::max(section, verify_hamiltonian_section(sys, x).max_abs());
      const double H = sys.hamiltonian().value(x);
      diss = std::max(diss, std::abs(dissipation_residual(sys, x)) / (1.0 + std::abs(H)));
      const StateDerivative a = evolution_field(sys, x);
      const StateDerivative b = hamilton_field(sys, x);
      double d = std::abs((a.ds - b.ds) - H) / (1.0 + std::abs(a.ds));
      if (a.dq.size()) d = std::max(d, (a.dq - b.dq).cwiseAbs().maxCoeff());
      d = std::max(d, (a.dw - b.dw).cwiseAbs().maxCoeff());
      rel = std::max(rel, d);
    }
    add("hamiltonian_section", 1e-9, section);
    add("dissipation", 1e-10, diss, "relative to 1 + |H|");
    add("evolution_relation", 1e-15, rel);
  }

  const auto dir = prepare_out(opt);
  CsvWriter csv(dir / "check.csv", {"check", "max_residual", "tolerance", "status"});
  report.line("scenario " + sc.name + " (" + model.label() + ", " + to_string(sc.side) + "), " +
              std::to_string(states.size()) + " samples, seed " + std::to_string(sc.seed));
  for (const Row& r : rows) {
    const bool pass = report.check(r.name, r.value, r.tolerance, r.note);
    csv.write_row({r.name, fmt17(r.value), fmt17(r.tolerance), pass ? "pass" : "fail"});
  }
  return report.passed() ? ok : check_failed;
}

// -------------------------------------------------------- legendre-compare

inline int legendre_compare(const Options& opt) {
  const Scenario sc = load_scenario_file(opt.config);
  if (!sc.legendre) throw ConfigError("legendre: missing");
  const LegendreSpec& ls = *sc.legendre;
  Report report(opt.quiet);
  const EquivalenceResult res = equivalence_check(sc.lagrangian_system(), sc.initial, ls.t_end, ls.h, ls.sample_every);
  const auto dir = prepare_out(opt);
  CsvWriter csv(dir / "legendre_gaps.csv", {"t", "gap"});
  for (std::size_t k = 0; k < res.times.size(); ++k) csv.write_numbers({res.times[k], res.gaps[k]});
  report.line("scenario " + sc.name + ": sup_gap = " + fmt17(res.sup_gap));
  report.check("legendre_equivalence", res.sup_gap, ls.tolerance);
  return report.passed() ? ok : check_failed;
}

// ---------------------------------------------------------------- hj-check

inline int hj_check(const Options& opt) {
  Scenario sc = load_scenario_file(opt.config);
  if (opt.seed) sc.seed = *opt.seed;
  if (!sc.hj) throw ConfigError("hj: missing");
  const HJSpec& hs = *sc.hj;
  const ContactHamiltonianSystem sys = sc.hamiltonian_system();
  const AlgebroidModel& model = sc.algebroid();
  const int n = model.n();
  const int m = model.m();
  const auto [gamma, f] = hj_section(sc);
  Report report(opt.quiet);

  std::vector<Vector> grid;
  if (n == 0) {
    grid.emplace_back(0);
  } else if (n == 1) {
    for (int k = 0; k < hs.points; ++k) {
      const double t = hs.points == 1 ? 0.0 : static_cast<double>(k) / (hs.points - 1);
      grid.push_back(Vector::Constant(1, hs.lo + t * (hs.hi - hs.lo)));
    }
  } else {
    Sampler sampler(sc.seed);
    for (int k = 0; k < hs.points; ++k) grid.push_back(sampler.uniform_vector(n, hs.lo, hs.hi));
  }

  std::vector<std::string> header;
  for (int i = 0; i < n; ++i) header.push_back("q" + std::to_string(i + 1));
  for (int a = 0; a < m; ++a) header.push_back("legendrian_" + std::to_string(a + 1));
  for (int a = 0; a < m; ++a) header.push_back("r_p" + std::to_string(a + 1));
  header.push_back("r_s");
  if (f) {
    for (int a = 0; a < m; ++a) header.push_back("hj_de" + std::to_string(a + 1));
    if (hs.section == HJSection::hamiltonian) header.push_back("hj_value");
  }

  const auto dir = prepare_out(opt);
  CsvWriter csv(dir / "hj_grid.csv", header);
  double legendrian = 0.0;
  double related = 0.0;
  double jet = 0.0;
  for (const Vector& q : grid) {
    std::vector<double> row(q.data(), q.data() + q.size());
    const Vector lr = legendrian_residual(model, gamma, q);
    const RelatednessResiduals rr = relatedness_residuals(sys, gamma, q);
    for (int a = 0; a < m; ++a) row.push_back(lr(a));
    for (int a = 0; a < m; ++a) row.push_back(rr.r_p(a));
    row.push_back(rr.r_s);
    legendrian = std::max(legendrian, lr.cwiseAbs().maxCoeff());
    related = std::max(related, rr.max_abs());
    if (f) {
      const JetResiduals jr = jet_hj_residuals(sys, *f, q, hs.section, hs.level);
      for (int a = 0; a < m; ++a) row.push_back(jr.d_e(a));
      if (jr.value) row.push_back(*jr.value);
      jet = std::max(jet, jr.max_abs());
    }
    csv.write_numbers(row);
  }

  report.line("scenario " + sc.name + ": " + std::to_string(grid.size()) + " grid points");
  if (f) {
    report.line("  max |legendrian residual| = " + fmt_short(legendrian));
    if (hs.section == HJSection::hamiltonian) report.line("  max |relatedness residual| = " + fmt_short(related));
    report.check(hs.section == HJSection::hamiltonian ? "hj_hamiltonian" : "hj_evolution", jet, hs.tolerance);
  } else {
    report.check("legendrian", legendrian, hs.tolerance);
    report.check("relatedness", related, hs.tolerance);
  }

  if (hs.projected) {
    if (!f) throw ConfigError("hj.projected: requires a 1-jet section given by 'f'");
    const ProjectedSpec& ps = *hs.projected;
    const ProjectedResult pr = projected_dynamics_check(sys, *f, ps.q0, ps.t_end, ps.h, ps.sample_every);
    CsvWriter pcsv(dir / "projected.csv", {"t", "gap"});
    for (std::size_t k = 0; k < pr.times.size(); ++k) pcsv.write_numbers({pr.times[k], pr.gaps[k]});
    if (pr.max_hj_residual > hs.tolerance) {
      report.line("  warning: HJ residual along the base curve reaches " + fmt_short(pr.max_hj_residual));
    }
    report.line("  projected sup_gap = " + fmt17(pr.sup_gap));
    report.check("projected_dynamics", pr.sup_gap, ps.tolerance);
  }
  return report.passed() ? ok : check_failed;
}

}  // namespace contalg::cli
