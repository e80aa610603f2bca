#pragma once

// Vertex-centered (Voronoi box) finite-volume meshes on axis-aligned tensor
// grids. Every node owns the box spanned by the midpoints to its neighbors;
// the box is split into region pieces so piecewise-constant data (doping, ion
// region, generation support) is integrated exactly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "ddsim/errors.hpp"
#include "ddsim/geometry.hpp"

namespace ddsim {

struct RegionPiece {
  int region = 0;
  double volume = 0.0;
  Point centroid{};
};

struct Cell {
  Point center{};
  double volume = 0.0;
  int region = 0;  ///< region holding the largest share of the box
  std::vector<RegionPiece> pieces;
};

struct Face {
  int left = 0;
  int right = 0;
  double area = 0.0;
  double distance = 0.0;

  double transmissibility() const { return area / distance; }
};

/// Boundary part of a node box. Nodes sit on the boundary, so distance is 0.
struct BoundaryFace {
  int cell = 0;
  double area = 0.0;
  double distance = 0.0;
  int tag = 0;
};

struct Region {
  std::string name;
  Box box;
};

/// Regions in painter's order: a later region overrides earlier ones where
/// they overlap. For layered 1-D devices the intervals simply tile the domain.
using RegionSpec = std::vector<Region>;

class FvMesh {
 public:
  int dimension = 1;
  Box bounds;
  std::vector<double> x_lines;
  std::vector<double> y_lines;
  std::vector<Cell> cells;
  std::vector<Face> faces;
  std::vector<BoundaryFace> boundary_faces;
  std::vector<std::string> region_names;
  std::vector<std::string> boundary_names;

  std::size_t size() const noexcept { return cells.size(); }

  int region_tag(const std::string& name) const {
    const auto it = std::find(region_names.begin(), region_names.end(), name);
    if (it == region_names.end()) throw MeshError("unknown region '" + name + "'");
    return static_cast<int>(it - region_names.begin());
  }

  int boundary_tag(const std::string& name) const {
    const auto it = std::find(boundary_names.begin(), boundary_names.end(), name);
    if (it == boundary_names.end()) throw MeshError("unknown boundary '" + name + "'");
    return static_cast<int>(it - boundary_names.begin());
  }

  double measure() const {
    double total = 0.0;
    for (const auto& c : cells) total += c.volume;
    return total;
  }

  double region_measure(int tag) const {
    if (tag < 0 || tag >= static_cast<int>(region_names.size())) {
      throw MeshError("unknown region tag " + std::to_string(tag));
    }
    double total = 0.0;
    for (const auto& c : cells) {
      for (const auto& p : c.pieces) {
        if (p.region == tag) total += p.volume;
      }
    }
    return total;
  }

  double region_measure(const std::string& name) const { return region_measure(region_tag(name)); }

  double boundary_measure(int tag) const {
    double total = 0.0;
    for (const auto& f : boundary_faces) {
      if (f.tag == tag) total += f.area;
    }
    return total;
  }

  /// Sorted, unique node indices touching the boundary part `tag`.
  std::vector<int> boundary_nodes(int tag) const {
    std::vector<int> nodes;
    for (const auto& f : boundary_faces) {
      if (f.tag == tag) nodes.push_back(f.cell);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return nodes;
  }

  /// Node adjacency lists built from interior faces.
  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(cells.size());
    for (const auto& f : faces) {
      adj[f.left].push_back(f.right);
      adj[f.right].push_back(f.left);
    }
    return adj;
  }

  bool connected() const {
    if (cells.empty()) return false;
    const auto adj = adjacency();
    std::vector<char> seen(cells.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t count = 1;
    while (!q.empty()) {
      const int k = q.front();
      q.pop();
      for (int l : adj[k]) {
        if (!seen[l]) {
          seen[l] = 1;
          ++count;
          q.push(l);
        }
      }
    }
    return count == cells.size();
  }
};

namespace detail {

inline int locate_region(const RegionSpec& regions, Point p) {
  int found = -1;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    if (regions[r].box.contains(p)) found = static_cast<int>(r);
  }
  return found;
}

// Adds a sub-box of a node's control volume to its region pieces.
inline void add_piece(Cell& cell, const RegionSpec& regions, double x0, double x1, double y0,
                      double y1) {
  const double vol = (x1 - x0) * (y1 - y0);
  if (!(vol > 0.0)) return;
  const Point mid{0.5 * (x0 + x1), 0.5 * (y0 + y1)};
  const int region = locate_region(regions, mid);
  if (region < 0) {
    throw MeshError("control volume piece at (" + std::to_string(mid.x) + ", " +
                    std::to_string(mid.y) + ") is not covered by any region");
  }
  for (auto& p : cell.pieces) {
    if (p.region == region) {
      const double total = p.volume + vol;
      p.centroid = {(p.centroid.x * p.volume + mid.x * vol) / total,
                    (p.centroid.y * p.volume + mid.y * vol) / total};
      p.volume = total;
      return;
    }
  }
  cell.pieces.push_back({region, vol, mid});
}

inline void finish_cell(Cell& cell) {
  std::sort(cell.pieces.begin(), cell.pieces.end(),
            [](const RegionPiece& a, const RegionPiece& b) { return a.region < b.region; });
  double best = -1.0;
  for (const auto& p : cell.pieces) {
    if (p.volume > best) {
      best = p.volume;
      cell.region = p.region;
    }
  }
}

inline std::vector<std::string> region_name_list(const RegionSpec& regions) {
  std::vector<std::string> names;
  for (const auto& r : regions) names.push_back(r.name);
  return names;
}

}  // namespace detail

/// Tensor-product mesh from explicit node lines. A single y-line (or an
/// empty list) yields a 1-D mesh with unit cross-section.
inline FvMesh build_tensor_mesh(const std::vector<double>& xs, const std::vector<double>& ys,
                                const RegionSpec& regions) {
  if (xs.size() < 2) throw MeshError("need at least two x node lines");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw MeshError("x node lines must be strictly increasing");
  }
  for (std::size_t j = 1; j < ys.size(); ++j) {
    if (!(ys[j] > ys[j - 1])) throw MeshError("y node lines must be strictly increasing");
  }
  if (regions.empty()) throw MeshError("mesh needs at least one region");

  FvMesh mesh;
  mesh.x_lines = xs;
  mesh.region_names = detail::region_name_list(regions);
  const std::size_t nx = xs.size();

  if (ys.size() < 2) {
    mesh.dimension = 1;
    mesh.bounds = Box::interval(xs.front(), xs.back());
    mesh.boundary_names = {"left", "right"};
    mesh.cells.resize(nx);
    for (std::size_t i = 0; i < nx; ++i) {
      Cell& c = mesh.cells[i];
      c.center = {xs[i], 0.0};
      const double xm = i > 0 ? 0.5 * (xs[i - 1] + xs[i]) : xs[i];
      const double xp = i + 1 < nx ? 0.5 * (xs[i] + xs[i + 1]) : xs[i];
      c.volume = xp - xm;
      detail::add_piece(c, regions, xm, xs[i], 0.0, 1.0);
      detail::add_piece(c, regions, xs[i], xp, 0.0, 1.0);
      detail::finish_cell(c);
      if (i + 1 < nx) {
        mesh.faces.push_back({static_cast<int>(i), static_cast<int>(i + 1), 1.0, xs[i + 1] - xs[i]});
      }
    }
    mesh.boundary_faces.push_back({0, 1.0, 0.0, 0});
    mesh.boundary_faces.push_back({static_cast<int>(nx - 1), 1.0, 0.0, 1});
    return mesh;
  }

  const std::size_t ny = ys.size();
  mesh.dimension = 2;
  mesh.y_lines = ys;
  mesh.bounds = Box{{xs.front(), ys.front()}, {xs.back(), ys.back()}};
  mesh.boundary_names = {"left", "right", "bottom", "top"};
  mesh.cells.resize(nx * ny);
  auto index = [nx](std::size_t i, std::size_t j) { return static_cast<int>(j * nx + i); };
  auto lower = [](const std::vector<double>& v, std::size_t i) {
    return i > 0 ? 0.5 * (v[i - 1] + v[i]) : v[i];
  };
  auto upper = [](const std::vector<double>& v, std::size_t i) {
    return i + 1 < v.size() ? 0.5 * (v[i] + v[i + 1]) : v[i];
  };

  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      Cell& c = mesh.cells[index(i, j)];
      c.center = {xs[i], ys[j]};
      const double xm = lower(xs, i), xp = upper(xs, i);
      const double ym = lower(ys, j), yp = upper(ys, j);
      c.volume = (xp - xm) * (yp - ym);
      detail::add_piece(c, regions, xm, xs[i], ym, ys[j]);
      detail::add_piece(c, regions, xs[i], xp, ym, ys[j]);
      detail::add_piece(c, regions, xm, xs[i], ys[j], yp);
      detail::add_piece(c, regions, xs[i], xp, ys[j], yp);
      detail::finish_cell(c);
      if (i + 1 < nx) mesh.faces.push_back({index(i, j), index(i + 1, j), yp - ym, xs[i + 1] - xs[i]});
      if (j + 1 < ny) mesh.faces.push_back({index(i, j), index(i, j + 1), xp - xm, ys[j + 1] - ys[j]});
      if (i == 0) mesh.boundary_faces.push_back({index(i, j), yp - ym, 0.0, 0});
      if (i + 1 == nx) mesh.boundary_faces.push_back({index(i, j), yp - ym, 0.0, 1});
      if (j == 0) mesh.boundary_faces.push_back({index(i, j), xp - xm, 0.0, 2});
      if (j + 1 == ny) mesh.boundary_faces.push_back({index(i, j), xp - xm, 0.0, 3});
    }
  }
  return mesh;
}

struct Layer {
  std::string name;
  double begin = 0.0;
  double end = 0.0;
};

/// Uniform-per-layer 1-D mesh. Layer k gets ceil(length_k / h) intervals; the
/// node on each layer interface is shared.
inline FvMesh build_interval_mesh(const std::vector<Layer>& layers, double spacing) {
  if (layers.empty()) throw MeshError("no layers given");
  if (!(spacing > 0.0)) throw MeshError("spacing must be positive");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!(layers[k].end > layers[k].begin)) throw MeshError("layer endpoints must increase");
    if (k > 0 && layers[k].begin != layers[k - 1].end) throw MeshError("layers must be contiguous");
    if (spacing > layers[k].end - layers[k].begin) {
      throw MeshError("spacing larger than layer '" + layers[k].name + "'");
    }
  }
  std::vector<double> xs{layers.front().begin};
  RegionSpec regions;
  for (const auto& layer : layers) {
    const double length = layer.end - layer.begin;
    const int n = static_cast<int>(std::ceil(length / spacing - 1e-12));
    for (int i = 1; i < n; ++i) xs.push_back(layer.begin + length * i / n);
    xs.push_back(layer.end);
    regions.push_back({layer.name, Box::interval(layer.begin, layer.end)});
  }
  return build_tensor_mesh(xs, {}, regions);
}

/// Uniform nx-by-ny node grid on `domain`. Regions after the first (the
/// background) are snapped to the nearest grid lines.
inline FvMesh build_rect_mesh(const Box& domain, RegionSpec regions, int nx, int ny) {
  if (nx < 2 || ny < 2) throw MeshError("rectangular mesh needs at least 2 x 2 nodes");
  if (!(domain.hi.x > domain.lo.x && domain.hi.y > domain.lo.y)) throw MeshError("degenerate domain");
  std::vector<double> xs(nx), ys(ny);
  for (int i = 0; i < nx; ++i) xs[i] = domain.lo.x + (domain.hi.x - domain.lo.x) * i / (nx - 1);
  for (int j = 0; j < ny; ++j) ys[j] = domain.lo.y + (domain.hi.y - domain.lo.y) * j / (ny - 1);
  auto snap = [](const std::vector<double>& lines, double v) {
    if (!std::isfinite(v)) return v;
    return *std::min_element(lines.begin(), lines.end(), [v](double a, double b) {
      return std::fabs(a - v) < std::fabs(b - v);
    });
  };
  for (std::size_t r = 1; r < regions.size(); ++r) {
    Box& b = regions[r].box;
    b = Box{{snap(xs, b.lo.x), snap(ys, b.lo.y)}, {snap(xs, b.hi.x), snap(ys, b.hi.y)}};
    if (!(b.hi.x > b.lo.x && b.hi.y > b.lo.y)) {
      throw MeshError("region '" + regions[r].name + "' collapses after snapping to the grid");
    }
  }
  if (regions.empty()) regions.push_back({"domain", domain});
  return build_tensor_mesh(xs, ys, regions);
}

inline double region_measure(const FvMesh& mesh, int tag) { return mesh.region_measure(tag); }

}  // namespace ddsim
