// Command-line front end: run presets or config files, reproduce level sweeps,
// and run the property suite.

#include "ldgplate/config.hpp"
#include "ldgplate/verification.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ldgplate;

namespace {

std::map<std::string, double> preset_params(int level, double tol_tilde, double K) {
  std::map<std::string, double> p;
  if (level > 0) p["level"] = level;
  if (tol_tilde > 0) p["tol_tilde"] = tol_tilde;
  if (K != 0) p["K"] = K;
  return p;
}

std::string default_output_dir(const std::string &name) {
  const char *root = std::getenv("LDGPLATE_OUTPUT_ROOT");
  return (fs::path(root && *root ? root : "ldgplate_output") / name).string();
}

void print_stages(const RunResult &r) {
  std::cout << std::left << std::setw(14) << "stage" << std::setw(16) << "E_h" << std::setw(16) << "D_h"
            << "steps\n";
  for (const auto &s : r.stages)
    std::cout << std::setw(14) << s.name << std::setw(16) << std::setprecision(6) << s.E << std::setw(16) << s.D
              << s.steps << '\n';
  std::cout << "Schur iterations per step: [" << r.flow.schur_min << ", " << r.flow.schur_max << "]\n";
  if (r.deflection) std::cout << "max y3 on the diagonal: " << *r.deflection << '\n';
  std::cout << "wall time: " << std::setprecision(3) << r.seconds << " s\n";
}

int cmd_run(const std::string &preset_name, const std::string &config_path, int level, double tol_tilde, double K,
            const std::vector<std::string> &sets, std::string output, int log_every, bool quiet) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  else if (!preset_name.empty()) cfg = preset(preset_name, preset_params(level, tol_tilde, K));
  else throw Error(ErrorKind::config, "run needs --preset or --config");
  for (const auto &s : sets) apply_override(cfg, s);
  if (!output.empty()) cfg.output_dir = output;
  if (cfg.output_dir.empty()) cfg.output_dir = default_output_dir(cfg.preset);

  fs::create_directories(cfg.output_dir);
  {
    std::ofstream os(fs::path(cfg.output_dir) / "config.ini");
    os << write_config(cfg);
  }
  RunOptions ro;
  ro.log = quiet ? nullptr : &std::cerr;
  ro.log_every = log_every;
  const RunResult r = run_experiment(cfg, ro);
  std::cout << "preset " << cfg.preset << ", output " << cfg.output_dir << '\n';
  print_stages(r);
  return 0;
}

int cmd_verify() {
  const auto checks = run_property_suite();
  int failed = 0;
  for (const auto &c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(44) << c.name << " residual "
              << std::scientific << std::setprecision(3) << c.residual << "  tol " << c.tolerance << std::defaultfloat;
    if (!c.note.empty()) std::cout << "  (" << c.note << ")";
    std::cout << '\n';
    failed += !c.passed;
  }
  std::cout << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

int cmd_table(const std::string &name, const std::vector<int> &levels, double gamma, const std::vector<std::string> &sets) {
  if (name != "vertical_load") throw Error(ErrorKind::invalid_parameter, "table supports the vertical_load preset");
  std::cout << std::left << std::setw(6) << "level" << std::setw(14) << "E_h" << std::setw(14) << "D_h" << std::setw(8)
            << "GF" << std::setw(14) << "Schur" << std::setw(12) << "max y3" << "seconds\n";
  for (int l : levels) {
    ExperimentConfig cfg = preset(name, {{"level", l}});
    cfg.gamma0 = cfg.gamma1 = gamma;
    for (const auto &s : sets) apply_override(cfg, s);
    RunOptions ro;
    ro.write_outputs = false;
    const RunResult r = run_experiment(cfg, ro);
    std::ostringstream range;
    range << '[' << r.flow.schur_min << ',' << r.flow.schur_max << ']';
    std::cout << std::setw(6) << l << std::setw(14) << std::setprecision(5) << r.flow.E << std::setw(14) << r.flow.D
              << std::setw(8) << r.flow.steps << std::setw(14) << range.str() << std::setw(12) << std::setprecision(4)
              << r.deflection.value_or(0.0) << std::setprecision(3) << r.seconds << '\n';
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"LDG discretization of prestrained plates"};
  app.require_subcommand(1);

  auto *run = app.add_subcommand("run", "run a preset or a config file");
  std::string preset_name, config_path, output;
  int level = 0, log_every = 50;
  double tol_tilde = 0, K = 0;
  std::vector<std::string> sets;
  bool quiet = false;
  auto *p_opt = run->add_option("--preset", preset_name, "preset name");
  std::string names;
  for (const auto &n : preset_names()) names += n + " ";
  p_opt->description("preset name: " + names);
  run->add_option("--config", config_path, "INI config file")->excludes(p_opt);
  run->add_option("--level", level, "refinement level (vertical_load)");
  run->add_option("--tol-tilde", tol_tilde, "metric preprocessing tolerance (catenoid)");
  run->add_option("--K", K, "Gaussian curvature (gel_disc)");
  run->add_option("--set", sets, "override section.key=value")->take_all();
  run->add_option("--output", output, "output directory");
  run->add_option("--log-every", log_every, "progress line every N steps (0 = off)");
  run->add_flag("--quiet", quiet, "no progress output");

  auto *verify = app.add_subcommand("verify", "run the property suite");

  auto *table = app.add_subcommand("table", "level sweep with tau = h");
  std::string table_preset = "vertical_load";
  std::vector<int> levels{3, 4, 5};
  double gamma = 1.0;
  std::vector<std::string> table_sets;
  table->add_option("--preset", table_preset, "preset with a level parameter");
  table->add_option("--levels", levels, "levels to run")->delimiter(',');
  table->add_option("--gamma", gamma, "stabilization gamma0 = gamma1");
  table->add_option("--set", table_sets, "override section.key=value")->take_all();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(preset_name, config_path, level, tol_tilde, K, sets, output, log_every, quiet);
    if (*verify) return cmd_verify();
    if (*table) return cmd_table(table_preset, levels, gamma, table_sets);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
