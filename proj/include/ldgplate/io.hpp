/**
 * @file io.hpp
 * @brief VTK and CSV output, and line sampling of broken fields.
 */
#pragma once

#include "ldgplate/flows.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

namespace ldgplate {

/// Writes the deformed surface y_h(Omega) as legacy ASCII VTK. Nodes are
/// duplicated per cell so jumps between cells stay visible; each cell is
/// drawn as 2x2 quads through its 3x3 lattice of reference points.
inline void write_vtk(const std::filesystem::path &path, const BrokenSpace &V, const FieldCoeffs &y,
                      const Eigen::VectorXd &cell_defect, const std::string &title = "ldgplate") {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path.string());
  const int nc = V.n_cells();
  const double t[3] = {0.0, 0.5, 1.0};
  os << "# vtk DataFile Version 2.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << 9 * nc << " double\n" << std::setprecision(12);
  std::vector<double> y3;
  y3.reserve(9 * nc);
  for (int c = 0; c < nc; ++c)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        const Vec3 p = evaluate(V, y, c, Vec2(t[i], t[j]));
        os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
        y3.push_back(p.z());
      }
  os << "CELLS " << 4 * nc << ' ' << 20 * nc << '\n';
  for (int c = 0; c < nc; ++c)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        const int b = 9 * c + 3 * j + i;
        os << "4 " << b << ' ' << b + 1 << ' ' << b + 4 << ' ' << b + 3 << '\n';
      }
  os << "CELL_TYPES " << 4 * nc << '\n';
  for (int k = 0; k < 4 * nc; ++k) os << "9\n";
  os << "CELL_DATA " << 4 * nc << "\nSCALARS metric_defect double 1\nLOOKUP_TABLE default\n";
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < 4; ++k) os << cell_defect[c] << '\n';
  os << "POINT_DATA " << 9 * nc << "\nSCALARS y3 double 1\nLOOKUP_TABLE default\n";
  for (double v : y3) os << v << '\n';
  if (!os) throw Error(ErrorKind::io, "failed writing " + path.string());
}

/// Append-only CSV log of flow steps, flushed after every record. With
/// `deterministic` the wall_ms column is written as 0 so repeated runs
/// produce identical files.
class HistoryCsv {
public:
  explicit HistoryCsv(const std::filesystem::path &path, bool deterministic = false)
      : os_(path), deterministic_(deterministic) {
    if (!os_) throw Error(ErrorKind::io, "cannot open " + path.string());
    os_ << "step,E_h,D_h,schur_iters,increment_norm,wall_ms\n" << std::flush;
  }

  void append(const StepRecord &r) {
    os_ << r.step << ',' << std::setprecision(12) << r.E << ',' << r.D << ',' << r.schur_iters << ','
        << r.increment_norm << ',' << std::setprecision(6) << (deterministic_ ? 0.0 : r.wall_ms) << '\n'
        << std::flush;
  }

  StepObserver observer() {
    return [this](const StepRecord &r) { append(r); };
  }

private:
  std::ofstream os_;
  bool deterministic_ = false;
};

struct LineSample {
  std::vector<Vec2> points;
  std::vector<Vec3> values;
};

/// Samples y_h at n equispaced points of the segment [a, b].
inline LineSample sample_line(const BrokenSpace &V, const FieldCoeffs &y, const Vec2 &a, const Vec2 &b, int n) {
  LineSample s;
  for (int k = 0; k < n; ++k) {
    const Vec2 x = a + (b - a) * (double(k) / (n - 1));
    const auto loc = locate(V.mesh(), x);
    if (!loc) throw Error(ErrorKind::invalid_domain, "sample point outside the mesh");
    s.points.push_back(x);
    s.values.push_back(evaluate(V, y, loc->first, loc->second));
  }
  return s;
}

/// Largest y3 along the diagonal x1 + x2 = 4 of (0,4)^2, 101 points.
inline double diagonal_deflection(const BrokenSpace &V, const FieldCoeffs &y) {
  const LineSample s = sample_line(V, y, Vec2(0, 4), Vec2(4, 0), 101);
  double m = -std::numeric_limits<double>::infinity();
  for (const auto &v : s.values) m = std::max(m, v.z());
  return m;
}

} // namespace ldgplate
