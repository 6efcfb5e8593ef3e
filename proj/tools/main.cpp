#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace contalg;

namespace {

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return cli::config_error;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::config_error;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::config_error;
  } catch (const StructureError& e) {
    std::cerr << "invalid algebroid: " << e.what() << '\n';
    return cli::config_error;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return cli::numerical_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::config_error;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact Lagrangian and Hamiltonian mechanics on Lie algebroids"};
  app.require_subcommand(1);

  cli::Options opt;
  std::uint64_t seed = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "scenario JSON file")->required();
    sub->add_option("--out", opt.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_flag("--quiet", opt.quiet, "print nothing on success");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate the dynamics and write trajectory.csv");
  auto* check = app.add_subcommand("check", "evaluate structure and identity checks at random states");
  auto* legendre = app.add_subcommand("legendre-compare", "compare Herglotz and induced Hamilton flows");
  auto* hj = app.add_subcommand("hj-check", "Hamilton-Jacobi residual grid and projected dynamics");
  for (auto* sub : {simulate, check, legendre, hj}) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::config_error;
  }

  for (auto* sub : {simulate, check, legendre, hj}) {
    if (sub->count("--seed") > 0) opt.seed = seed;
  }

  if (*simulate) return guarded([&] { return cli::simulate(opt); });
  if (*check) return guarded([&] { return cli::check(opt); });
  if (*legendre) return guarded([&] { return cli::legendre_compare(opt); });
  return guarded([&] { return cli::hj_check(opt); });
}
