#include "ldgplate/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using namespace ldgplate;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("ldgplate_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path &p) {
  std::ifstream is(p);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(Config, EveryPresetRoundTrips) {
  for (const auto &name : preset_names()) {
    const ExperimentConfig c = preset(name);
    std::istringstream is(write_config(c));
    EXPECT_EQ(parse_config(is), c) << name;
  }
}

TEST(Config, CustomConfigRoundTrips) {
  ExperimentConfig c;
  c.force = Vec3(0.1, 1.0 / 3.0, -2e-7);
  c.tau = 0.1 + 0.2;
  c.dirichlet = "left,top";
  c.output_dir = "some dir";
  std::istringstream is(write_config(c));
  EXPECT_EQ(parse_config(is), c);
}

TEST(Config, PresetDefaultsThenOverrides) {
  std::istringstream is("[experiment]\npreset = one_mode\n\n[flow]\ntau = 0.2\n");
  const ExperimentConfig c = parse_config(is);
  ExperimentConfig expected = preset("one_mode");
  expected.tau = 0.2;
  EXPECT_EQ(c, expected);
}

TEST(Config, UnknownKeysAreRejected) {
  std::istringstream is("[flow]\ntau = 0.2\nspeed = 3\n");
  try {
    parse_config(is, "test.ini");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("flow.speed"), std::string::npos);
  }
  std::istringstream is2("[nosuch]\nx = 1\n");
  EXPECT_THROW(parse_config(is2), Error);
}

TEST(Config, BadValuesAndSyntaxCarryDiagnostics) {
  std::istringstream bad_value("[flow]\ntau = fast\n");
  try {
    parse_config(bad_value, "a.ini");
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("flow.tau"), std::string::npos);
  }
  std::istringstream bad_syntax("[flow]\ntau = 1\nthis line has no equals\n");
  try {
    parse_config(bad_syntax, "b.ini");
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("b.ini:3"), std::string::npos) << e.what();
  }
  std::istringstream bad_vec("[material]\nforce = 1 2\n");
  EXPECT_THROW(parse_config(bad_vec), Error);
}

TEST(Config, Overrides) {
  ExperimentConfig c = preset("vertical_load", {{"level", 3}});
  apply_override(c, "material.force = 0 0 0.05");
  apply_override(c, "flow.max_steps=7");
  apply_override(c, "output.deterministic=false");
  EXPECT_EQ(c.force, Vec3(0, 0, 0.05));
  EXPECT_EQ(c.max_steps, 7);
  EXPECT_FALSE(c.deterministic);
  EXPECT_THROW(apply_override(c, "tau=1"), Error);
  EXPECT_THROW(apply_override(c, "flow.nope=1"), Error);
}

TEST(Presets, UnknownPresetAndParameters) {
  EXPECT_THROW(preset("moebius"), Error);
  EXPECT_THROW(preset("vertical_load", {{"level", 0}}), Error);
  const auto c = preset("vertical_load", {{"level", 4}});
  EXPECT_EQ(c.nx, 16);
  EXPECT_NEAR(c.tau, 4.0 / 16 * std::sqrt(2.0), 1e-15);
  EXPECT_EQ(preset("catenoid", {{"tol_tilde", 0.1}}).pp_tol, 0.1);
  EXPECT_EQ(preset("gel_disc", {{"K", 2}}).metric_K, 2.0);
}

TEST(Presets, IdentitySquareHasNothingToDo) {
  ExperimentConfig c = preset("identity_square");
  c.output_dir = scratch("identity").string();
  const RunResult r = run_experiment(c);
  EXPECT_NEAR(r.flow.E, 0.0, 1e-20);
  EXPECT_NEAR(r.flow.D, 0.0, 1e-12);
  EXPECT_EQ(r.flow.steps, 0);
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "final.vtk"));
  EXPECT_TRUE(fs::exists(fs::path(c.output_dir) / "summary.txt"));
}

TEST(Output, VtkLayout) {
  const Mesh m = build_rectangle({0, 1}, {0, 1}, 2, 1);
  const BrokenSpace V(m);
  const fs::path p = scratch("vtk") / "s.vtk";
  const FieldCoeffs y = interpolate(V, [](const Vec2 &x) { return Vec3(x.x(), x.y(), x.x() * x.y()); });
  write_vtk(p, V, y, Eigen::Vector2d(0.5, 0.25), "test");
  std::ifstream is(p);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  EXPECT_EQ(lines[0], "# vtk DataFile Version 2.0");
  EXPECT_EQ(lines[2], "ASCII");
  EXPECT_EQ(lines[3], "DATASET UNSTRUCTURED_GRID");
  EXPECT_EQ(lines[4], "POINTS 18 double");
  // last point of cell 1 is the corner (1, 1) with y3 = 1
  EXPECT_EQ(lines[4 + 18], "1 1 1");
  EXPECT_EQ(lines[23], "CELLS 8 40");
  EXPECT_EQ(lines[32], "CELL_TYPES 8");
  EXPECT_EQ(lines[33], "9");
  EXPECT_EQ(lines[41], "CELL_DATA 8");
  EXPECT_EQ(lines[42], "SCALARS metric_defect double 1");
  EXPECT_EQ(lines[44], "0.5");
  EXPECT_EQ(lines[48], "0.25");
  EXPECT_EQ(lines[52], "POINT_DATA 18");
  EXPECT_EQ(lines.size(), 55u + 18u);
}

TEST(Output, DeterministicCsvAcrossRuns) {
  ExperimentConfig c = preset("vertical_load", {{"level", 2}});
  c.output_dir = scratch("det_a").string();
  run_experiment(c);
  const std::string a = slurp(fs::path(c.output_dir) / "flow.csv");
  c.output_dir = scratch("det_b").string();
  run_experiment(c);
  const std::string b = slurp(fs::path(c.output_dir) / "flow.csv");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "step,E_h,D_h,schur_iters,increment_norm,wall_ms");
  EXPECT_GT(std::count(a.begin(), a.end(), '\n'), 2);
}

TEST(Output, DiagonalSampling) {
  const Mesh m = build_rectangle({0, 4}, {0, 4}, 4, 4);
  const BrokenSpace V(m);
  const FieldCoeffs y = interpolate(V, [](const Vec2 &x) { return Vec3(x.x(), x.y(), x.x() * (4 - x.x()) / 4); });
  EXPECT_NEAR(diagonal_deflection(V, y), 1.0, 1e-12);
  const LineSample s = sample_line(V, y, Vec2(0, 4), Vec2(4, 0), 101);
  EXPECT_EQ(s.values.size(), 101u);
  EXPECT_THROW(sample_line(V, y, Vec2(0, 0), Vec2(5, 5), 3), Error);
}
