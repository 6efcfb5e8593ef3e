#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "contalg/scenario.hpp"
#include "support.hpp"

using namespace contalg;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = CONTALG_SOURCE_DIR;

json tq_doc() {
  return json::parse(R"({
    "name": "tq",
    "algebroid": {"kind": "tangent_bundle", "n": 1},
    "system": {"side": "hamiltonian", "expression": "0.5*p1^2 + 0.5*q1^2 + c*s", "parameters": {"c": 0.5}},
    "initial_state": {"q": [1.0], "w": [0.0], "s": 0.0},
    "integrator": {"method": "rk4", "h": 0.01, "t_end": 1.0},
    "checks": [{"name": "dissipation_residual", "tolerance": 1e-12}]
  })");
}

std::string config_error(const json& doc) {
  try {
    load_scenario(doc);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CONTALG_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("contalg_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST(Scenario, LoadsMinimalDocument) {
  const Scenario sc = load_scenario(tq_doc());
  EXPECT_EQ(sc.name, "tq");
  EXPECT_EQ(sc.side, Side::hamiltonian);
  EXPECT_EQ(sc.algebroid().n(), 1);
  EXPECT_EQ(sc.initial.q(0), 1.0);
  EXPECT_EQ(sc.parameters.at("c"), 0.5);
  EXPECT_DOUBLE_EQ(sc.field.value(hstate(vec({0}), vec({0}), 2.0)), 1.0);
  EXPECT_EQ(sc.tolerance("dissipation_residual", 1.0), 1e-12);
  EXPECT_EQ(sc.tolerance("other", 1.0), 1.0);
  EXPECT_THROW(sc.lagrangian_system(), ConfigError);
}

TEST(Scenario, ShippedScenariosLoad) {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(kSource / "scenarios")) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_scenario_file(entry.path().string())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 10);
}

TEST(Scenario, ErrorsNameTheFieldPath) {
  json d = tq_doc();
  d.erase("algebroid");
  EXPECT_NE(config_error(d).find("algebroid: missing"), std::string::npos);

  d = tq_doc();
  d["initial_state"]["w"] = {1.0, 2.0};
  EXPECT_NE(config_error(d).find("initial_state.w: expected 1 entries, got 2"), std::string::npos);

  d = tq_doc();
  d["algebroid"]["kind"] = "torus";
  EXPECT_NE(config_error(d).find("algebroid.kind: unknown algebroid kind 'torus'"), std::string::npos);

  d = tq_doc();
  d["checks"][0].erase("tolerance");
  EXPECT_NE(config_error(d).find("checks[0].tolerance: missing"), std::string::npos);

  d = tq_doc();
  d["integrator"]["h"] = -1;
  EXPECT_NE(config_error(d).find("integrator.h: must be positive"), std::string::npos);

  d = tq_doc();
  d["system"]["side"] = "both";
  EXPECT_NE(config_error(d).find("system.side"), std::string::npos);

  d = tq_doc();
  d["seed"] = -4;
  EXPECT_NE(config_error(d).find("seed: expected a non-negative integer"), std::string::npos);
}

TEST(Scenario, ExpressionErrorsCarryPathAndOffset) {
  json d = tq_doc();
  d["system"]["expression"] = "0.5*p1^2 + q2";
  try {
    load_scenario(d);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("system.expression: q2 out of range"), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), 11u);
  }
  d["system"]["expression"] = "c*s + k";
  EXPECT_NE(config_error(d).find("unknown identifier 'k'"), std::string::npos) << config_error(d);
}

TEST(Scenario, StructureViolationUnlessUnvalidated) {
  const std::string path = (kSource / "tests/data/so3_perturbed.json").string();
  EXPECT_THROW(load_scenario_file(path), StructureError);
  const Scenario sc = load_scenario_file(path, false);
  EXPECT_NEAR(structure_residuals(sc.algebroid(), Vector(0)).jacobi.max_abs(), 0.1, 1e-15);
}

TEST(Scenario, CustomAlgebroid) {
  const Scenario sc = load_scenario_file((kSource / "scenarios/custom_exp_anchor.json").string());
  const Matrix rho = sc.algebroid().anchor(vec({0.5, 0.0}));
  EXPECT_NEAR(rho(1, 1), std::exp(0.5), 1e-15);
  EXPECT_EQ(sc.algebroid().structure(vec({0.5, 0.0}))(1, 0, 1), 1.0);
}

TEST(Scenario, MissingFileAndInvalidJson) {
  EXPECT_THROW(load_scenario_file("/nonexistent/config.json"), ConfigError);
  const fs::path dir = scratch("badjson");
  std::ofstream(dir / "bad.json") << "{\"name\": ";
  EXPECT_THROW(load_scenario_file((dir / "bad.json").string()), ConfigError);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("cli");
  const std::string o = " --out " + out.string() + " --quiet";
  const std::string data = (kSource / "tests/data").string();
  EXPECT_EQ(run_cli("simulate --config " + (kSource / "scenarios/tq_oscillator_hamiltonian.json").string() + o), 0);
  EXPECT_EQ(run_cli("check --config " + data + "/so3_perturbed.json" + o), 1);
  EXPECT_EQ(run_cli("simulate --config " + data + "/so3_perturbed.json" + o), 2);
  EXPECT_EQ(run_cli("simulate --config " + data + "/malformed_expression.json" + o), 2);
  EXPECT_EQ(run_cli("hj-check --config " + data + "/hj_negative.json" + o), 1);
  EXPECT_EQ(run_cli("simulate --config /nonexistent.json" + o), 2);
  EXPECT_EQ(run_cli("simulate" + o), 2);
  EXPECT_EQ(run_cli("legendre-compare --config " + (kSource / "scenarios/tq_oscillator_hamiltonian.json").string() + o),
            2);
}

TEST(Cli, OutputFiles) {
  const fs::path out = scratch("files");
  const std::string o = " --out " + out.string() + " --quiet";
  ASSERT_EQ(run_cli("simulate --config " + (kSource / "scenarios/tq_oscillator_lagrangian.json").string() + o), 0);
  EXPECT_EQ(first_line(out / "trajectory.csv"), "t,q1,y1,s,E_L,ds_residual,energy_residual");
  ASSERT_EQ(run_cli("check --config " + (kSource / "scenarios/so3_herglotz.json").string() + o), 0);
  EXPECT_EQ(first_line(out / "check.csv"), "check,max_residual,tolerance,status");
  ASSERT_EQ(run_cli("legendre-compare --config " + (kSource / "scenarios/so3_herglotz.json").string() + o), 0);
  EXPECT_EQ(first_line(out / "legendre_gaps.csv"), "t,gap");
  ASSERT_EQ(run_cli("hj-check --config " + (kSource / "scenarios/hj_constructed.json").string() + o), 0);
  EXPECT_TRUE(fs::exists(out / "hj_grid.csv"));
  EXPECT_TRUE(fs::exists(out / "projected.csv"));
}
