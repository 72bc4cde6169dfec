/**
 * @file mesh.hpp
 * @brief Conforming quadrilateral meshes of rectangles and discs.
 *
 * Every mesh is generated from a small set of charts (maps from the unit
 * square into the physical domain). A cell remembers its chart and the
 * parameter box it covers, so uniform refinement splits boxes and
 * re-evaluates the charts; on the disc this places new boundary vertices
 * exactly on the circle. Cells themselves use the bilinear map through
 * their four vertices.
 *
 * Edge orientation: an interior edge's normal points from the lower cell
 * index (the "minus" side) to the higher one; a boundary edge's normal is
 * the outward normal.
 */
#pragma once

#include "ldgplate/types.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <vector>

namespace ldgplate {

enum class EdgeClass { interior, dirichlet, free_boundary };

/// Decides Dirichlet membership from an edge midpoint.
using BoundaryPredicate = std::function<bool(const Vec2 &)>;

using Chart = std::function<Vec2(const Vec2 &)>;

struct ParamBox {
  double u0 = 0, u1 = 1, w0 = 0, w1 = 1;
};

struct Cell {
  std::array<int, 4> v{};   // counter-clockwise: (0,0),(1,0),(1,1),(0,1) in reference
  int chart = 0;
  ParamBox box;
};

struct EdgeSide {
  int cell = -1;
  int face = -1;         // local face 0..3
  bool reversed = false; // face parameter runs opposite to the edge parameter
};

struct Edge {
  int a = -1, b = -1;            // endpoints; edge parameter t runs from a to b
  std::array<EdgeSide, 2> sides; // sides[0] is the minus side
  int n_sides = 0;
  Vec2 normal = Vec2::Zero();
  double h = 0.0;
  EdgeClass cls = EdgeClass::interior;

  bool is_boundary() const { return n_sides == 1; }
};

/// Reference coordinates of the point with face parameter s on local face f.
inline Vec2 face_point(int face, double s) {
  switch (face) {
  case 0: return {s, 0.0};
  case 1: return {1.0, s};
  case 2: return {s, 1.0};
  default: return {0.0, s};
  }
}

/// Local vertex indices (start, end) of a face in face-parameter order.
inline std::array<int, 2> face_vertices(int face) {
  switch (face) {
  case 0: return {0, 1};
  case 1: return {1, 2};
  case 2: return {3, 2};
  default: return {0, 3};
  }
}

class Mesh {
public:
  Mesh() = default;

  Mesh(std::vector<Chart> charts, const std::vector<std::pair<int, ParamBox>> &boxes,
       BoundaryPredicate dirichlet, double exact_area, std::string kind)
      : charts_(std::move(charts)), dirichlet_(std::move(dirichlet)), exact_area_(exact_area),
        kind_(std::move(kind)) {
    build(boxes);
  }

  int n_cells() const { return static_cast<int>(cells_.size()); }
  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec2> &vertices() const { return vertices_; }
  const std::vector<Cell> &cells() const { return cells_; }
  const std::vector<Edge> &edges() const { return edges_; }
  const Cell &cell(int c) const { return cells_[c]; }
  const Edge &edge(int e) const { return edges_[e]; }
  const std::array<int, 4> &cell_edges(int c) const { return cell_edges_[c]; }
  double h_cell(int c) const { return h_cell_[c]; }
  const std::vector<Chart> &charts() const { return charts_; }
  const BoundaryPredicate &dirichlet_predicate() const { return dirichlet_; }
  double exact_area() const { return exact_area_; }
  const std::string &kind() const { return kind_; }

  bool has_dirichlet() const {
    for (const auto &e : edges_)
      if (e.cls == EdgeClass::dirichlet) return true;
    return false;
  }

  /// Bilinear cell map F_K.
  Vec2 map(int c, const Vec2 &xi) const {
    const auto &v = cells_[c].v;
    const double s = xi.x(), t = xi.y();
    return (1 - s) * (1 - t) * vertices_[v[0]] + s * (1 - t) * vertices_[v[1]] +
           s * t * vertices_[v[2]] + (1 - s) * t * vertices_[v[3]];
  }

  /// Jacobian dF_K/dxi (columns are d/dxi1, d/dxi2).
  Mat2 jacobian(int c, const Vec2 &xi) const {
    const auto &v = cells_[c].v;
    const double s = xi.x(), t = xi.y();
    Mat2 j;
    j.col(0) = (1 - t) * (vertices_[v[1]] - vertices_[v[0]]) + t * (vertices_[v[2]] - vertices_[v[3]]);
    j.col(1) = (1 - s) * (vertices_[v[3]] - vertices_[v[0]]) + s * (vertices_[v[2]] - vertices_[v[1]]);
    return j;
  }

  /// Mixed second derivative d^2F/dxi1 dxi2 (the only nonzero second derivative of a bilinear map).
  Vec2 twist(int c) const {
    const auto &v = cells_[c].v;
    return vertices_[v[0]] - vertices_[v[1]] + vertices_[v[2]] - vertices_[v[3]];
  }

  bool is_affine(int c) const { return twist(c).norm() <= 1e-13 * h_cell_[c]; }

  Vec2 centroid(int c) const { return map(c, Vec2(0.5, 0.5)); }

  /// Physical point on edge e at edge parameter t in [0,1].
  Vec2 edge_point(int e, double t) const {
    const auto &ed = edges_[e];
    return (1 - t) * vertices_[ed.a] + t * vertices_[ed.b];
  }

  /// Reference coordinates in side k's cell for edge parameter t.
  Vec2 edge_reference_point(int e, int k, double t) const {
    const auto &s = edges_[e].sides[k];
    return face_point(s.face, s.reversed ? 1.0 - t : t);
  }

  double cell_area(int c) const {
    // 2x2 Gauss is exact for the bilinear Jacobian determinant
    const double g = 0.5 / std::sqrt(3.0);
    double a = 0;
    for (double s : {0.5 - g, 0.5 + g})
      for (double t : {0.5 - g, 0.5 + g}) a += 0.25 * jacobian(c, Vec2(s, t)).determinant();
    return a;
  }

  double area() const {
    double a = 0;
    for (int c = 0; c < n_cells(); ++c) a += cell_area(c);
    return a;
  }

  double min_h() const { return *std::min_element(h_cell_.begin(), h_cell_.end()); }
  double max_h() const { return *std::max_element(h_cell_.begin(), h_cell_.end()); }

  std::vector<std::pair<int, ParamBox>> boxes() const {
    std::vector<std::pair<int, ParamBox>> out;
    out.reserve(cells_.size());
    for (const auto &c : cells_) out.emplace_back(c.chart, c.box);
    return out;
  }

  /// Cells sharing an edge with c (at most 4).
  std::vector<int> neighbors(int c) const {
    std::vector<int> out;
    for (int e : cell_edges_[c]) {
      const auto &ed = edges_[e];
      for (int k = 0; k < ed.n_sides; ++k)
        if (ed.sides[k].cell != c) out.push_back(ed.sides[k].cell);
    }
    return out;
  }

private:
  int find_or_add_vertex(const Vec2 &x, std::map<std::pair<long long, long long>, int> &lookup) {
    const double scale = 1e8;
    const long long kx = std::llround(x.x() * scale), ky = std::llround(x.y() * scale);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = lookup.find({kx + dx, ky + dy});
        if (it != lookup.end() && (vertices_[it->second] - x).norm() < 1e-9) return it->second;
      }
    vertices_.push_back(x);
    lookup[{kx, ky}] = static_cast<int>(vertices_.size()) - 1;
    return static_cast<int>(vertices_.size()) - 1;
  }

  void build(const std::vector<std::pair<int, ParamBox>> &boxes) {
    std::map<std::pair<long long, long long>, int> vlookup;
    cells_.clear();
    vertices_.clear();
    for (const auto &[chart, box] : boxes) {
      Cell c;
      c.chart = chart;
      c.box = box;
      const Vec2 p[4] = {{box.u0, box.w0}, {box.u1, box.w0}, {box.u1, box.w1}, {box.u0, box.w1}};
      for (int i = 0; i < 4; ++i) c.v[i] = find_or_add_vertex(charts_[chart](p[i]), vlookup);
      cells_.push_back(c);
    }

    h_cell_.resize(cells_.size());
    for (int c = 0; c < n_cells(); ++c) {
      double h = 0;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
          h = std::max(h, (vertices_[cells_[c].v[i]] - vertices_[cells_[c].v[j]]).norm());
      h_cell_[c] = h;
      const Vec2 xi(0.5, 0.5);
      if (jacobian(c, xi).determinant() <= 0.0)
        throw Error(ErrorKind::degenerate_cell, "cell " + std::to_string(c) + " has non-positive Jacobian");
    }

    edges_.clear();
    cell_edges_.assign(cells_.size(), {-1, -1, -1, -1});
    std::map<std::pair<int, int>, int> elookup;
    for (int c = 0; c < n_cells(); ++c) {
      for (int f = 0; f < 4; ++f) {
        const auto lv = face_vertices(f);
        const int va = cells_[c].v[lv[0]], vb = cells_[c].v[lv[1]];
        const auto key = std::minmax(va, vb);
        auto it = elookup.find(key);
        if (it == elookup.end()) {
          Edge e;
          e.a = va;
          e.b = vb;
          e.sides[0] = {c, f, false};
          e.n_sides = 1;
          const Vec2 t = vertices_[vb] - vertices_[va];
          e.h = t.norm();
          Vec2 n(t.y(), -t.x());
          n /= n.norm();
          if ((0.5 * (vertices_[va] + vertices_[vb]) - centroid(c)).dot(n) < 0) n = -n;
          e.normal = n;
          edges_.push_back(e);
          const int id = static_cast<int>(edges_.size()) - 1;
          elookup[{key.first, key.second}] = id;
          cell_edges_[c][f] = id;
        } else {
          Edge &e = edges_[it->second];
          if (e.n_sides != 1)
            throw Error(ErrorKind::invalid_domain, "edge shared by more than two cells");
          e.sides[1] = {c, f, va != e.a};
          e.n_sides = 2;
          cell_edges_[c][f] = it->second;
        }
      }
    }
    for (auto &e : edges_) {
      if (e.n_sides == 2) {
        e.cls = EdgeClass::interior;
      } else {
        const Vec2 mid = 0.5 * (vertices_[e.a] + vertices_[e.b]);
        e.cls = (dirichlet_ && dirichlet_(mid)) ? EdgeClass::dirichlet : EdgeClass::free_boundary;
      }
    }
  }

  std::vector<Chart> charts_;
  BoundaryPredicate dirichlet_;
  double exact_area_ = 0.0;
  std::string kind_;
  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 4>> cell_edges_;
  std::vector<double> h_cell_;
};

/// Cell containing x and its reference coordinates, by Newton on the
/// bilinear map of every candidate cell. The first match wins on shared edges.
inline std::optional<std::pair<int, Vec2>> locate(const Mesh &mesh, const Vec2 &x, double tol = 1e-10) {
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const auto &v = mesh.cell(c).v;
    Vec2 lo = mesh.vertices()[v[0]], hi = lo;
    for (int k = 1; k < 4; ++k) {
      lo = lo.cwiseMin(mesh.vertices()[v[k]]);
      hi = hi.cwiseMax(mesh.vertices()[v[k]]);
    }
    const double pad = 1e-9 + tol * mesh.h_cell(c);
    if ((x.array() < lo.array() - pad).any() || (x.array() > hi.array() + pad).any()) continue;
    Vec2 xi(0.5, 0.5);
    for (int it = 0; it < 30; ++it) {
      const Vec2 r = mesh.map(c, xi) - x;
      xi -= mesh.jacobian(c, xi).lu().solve(r);
      if (r.norm() < 1e-14 * (1 + x.norm())) break;
    }
    if ((xi.array() >= -tol).all() && (xi.array() <= 1 + tol).all() && (mesh.map(c, xi) - x).norm() < 1e-9)
      return std::make_pair(c, xi.cwiseMax(0.0).cwiseMin(1.0).eval());
  }
  return std::nullopt;
}

/// Uniform tensor grid of nx*ny rectangles on [x0,x1]x[y0,y1].
inline Mesh build_rectangle(std::pair<double, double> x_range, std::pair<double, double> y_range,
                            int nx, int ny, BoundaryPredicate dirichlet = {}) {
  const auto [x0, x1] = x_range;
  const auto [y0, y1] = y_range;
  if (!(x1 > x0) || !(y1 > y0) || !std::isfinite(x0 + x1 + y0 + y1))
    throw Error(ErrorKind::invalid_domain, "build_rectangle: degenerate range");
  if (nx < 1 || ny < 1) throw Error(ErrorKind::invalid_domain, "build_rectangle: nx, ny must be >= 1");
  Chart chart = [=](const Vec2 &p) { return Vec2(x0 + (x1 - x0) * p.x(), y0 + (y1 - y0) * p.y()); };
  std::vector<std::pair<int, ParamBox>> boxes;
  boxes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      boxes.push_back({0, ParamBox{double(i) / nx, double(i + 1) / nx, double(j) / ny, double(j + 1) / ny}});
  return Mesh({chart}, boxes, std::move(dirichlet), (x1 - x0) * (y1 - y0), "rectangle");
}

/// Five-block disc: a central square with half-width R/(2+sqrt 2) and four
/// blocks blending its sides into quarter arcs. target_cells = 5*4^l.
inline Mesh build_disc(double radius, int target_cells, BoundaryPredicate dirichlet = {}) {
  if (!(radius > 0)) throw Error(ErrorKind::invalid_domain, "build_disc: radius must be positive");
  int level = -1;
  for (int l = 0, n = 5; l < 12; ++l, n *= 4)
    if (n == target_cells) level = l;
  if (level < 0)
    throw Error(ErrorKind::invalid_parameter,
                "build_disc: target_cells must be 5*4^l, got " + std::to_string(target_cells));

  const double a = radius / (2.0 + std::sqrt(2.0));
  std::vector<Chart> charts;
  charts.push_back([a](const Vec2 &p) { return Vec2(-a + 2 * a * p.x(), -a + 2 * a * p.y()); });
  for (int k = 0; k < 4; ++k) {
    const double ang = k * std::numbers::pi / 2;
    const double c = std::cos(ang), s = std::sin(ang);
    charts.push_back([=](const Vec2 &p) {
      const double t = p.x(), w = p.y();
      const Vec2 inner(a, a * (2 * w - 1));
      const double phi = std::numbers::pi / 4 * (2 * w - 1);
      const Vec2 outer(radius * std::cos(phi), radius * std::sin(phi));
      const Vec2 x = (1 - t) * inner + t * outer;
      return Vec2(c * x.x() - s * x.y(), s * x.x() + c * x.y());
    });
  }
  const int n = 1 << level;
  std::vector<std::pair<int, ParamBox>> boxes;
  for (int ch = 0; ch < 5; ++ch)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        boxes.push_back({ch, ParamBox{double(i) / n, double(i + 1) / n, double(j) / n, double(j + 1) / n}});
  return Mesh(charts, boxes, std::move(dirichlet), std::numbers::pi * radius * radius, "disc");
}

/// Splits every cell into four through its chart.
inline Mesh uniform_refine(const Mesh &mesh) {
  std::vector<std::pair<int, ParamBox>> boxes;
  boxes.reserve(4 * mesh.cells().size());
  for (const auto &[chart, b] : mesh.boxes()) {
    const double um = 0.5 * (b.u0 + b.u1), wm = 0.5 * (b.w0 + b.w1);
    boxes.push_back({chart, {b.u0, um, b.w0, wm}});
    boxes.push_back({chart, {um, b.u1, b.w0, wm}});
    boxes.push_back({chart, {b.u0, um, wm, b.w1}});
    boxes.push_back({chart, {um, b.u1, wm, b.w1}});
  }
  return Mesh(mesh.charts(), boxes, mesh.dirichlet_predicate(), mesh.exact_area(), mesh.kind());
}

/// Active skeleton: interior and Dirichlet edges.
struct Skeleton {
  std::vector<int> active_edges;
  std::vector<int> interior_edges;
  std::vector<int> dirichlet_edges;
};

inline Skeleton skeleton(const Mesh &mesh) {
  Skeleton s;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    switch (mesh.edge(e).cls) {
    case EdgeClass::interior:
      s.interior_edges.push_back(e);
      s.active_edges.push_back(e);
      break;
    case EdgeClass::dirichlet:
      s.dirichlet_edges.push_back(e);
      s.active_edges.push_back(e);
      break;
    case EdgeClass::free_boundary: break;
    }
  }
  return s;
}

} // namespace ldgplate
