#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddsim/io.hpp"
#include "ddsim/mesh.hpp"
#include "ddsim/scenarios.hpp"

using namespace ddsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> read_column(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<double> v;
  double x;
  while (f >> x) v.push_back(x);
  return v;
}

double total_volume(const FvMesh& m) {
  double s = 0.0;
  for (const auto& c : m.cells) s += c.volume;
  return s;
}

}  // namespace

TEST_CASE("PSC interval mesh") {
  const auto m = psc_mesh();
  // ceil(1/h) + ceil(4/h) + ceil(2/h) intervals.
  CHECK(m->cells.size() == 558);
  CHECK(m->dimension == 1);
  CHECK_THAT(total_volume(*m), WithinRel(7.0, 1e-14));
  CHECK_THAT(m->region_measure("ETL"), WithinRel(1.0, 1e-14));
  CHECK_THAT(m->region_measure("PVK"), WithinRel(4.0, 1e-14));
  CHECK_THAT(m->region_measure("HTL"), WithinRel(2.0, 1e-14));
  // Layer edges are nodes.
  for (double edge : {1.0, 5.0}) {
    CHECK(std::any_of(m->cells.begin(), m->cells.end(), [&](const Cell& c) { return std::fabs(c.center.x - edge) < 1e-14; }));
  }
  double hmax = 0.0;
  for (const auto& f : m->faces) hmax = std::max(hmax, f.distance);
  CHECK(hmax <= 1.26e-2 + 1e-15);
  CHECK(m->boundary_nodes(m->boundary_tag("left")) == std::vector<int>{0});
  CHECK(m->boundary_nodes(m->boundary_tag("right")) == std::vector<int>{557});
}

TEST_CASE("LBIC tensor mesh matches the node-line fixture") {
  const auto lines = lbic_node_lines();
  const auto fx = read_column(std::string(DDSIM_TEST_DATA) + "/lbic_x_lines.txt");
  const auto fy = read_column(std::string(DDSIM_TEST_DATA) + "/lbic_y_lines.txt");
  REQUIRE(lines.x.size() == fx.size());
  REQUIRE(lines.y.size() == fy.size());
  for (std::size_t i = 0; i < fx.size(); ++i) CHECK_THAT(lines.x[i], WithinAbs(fx[i], 1e-14));
  for (std::size_t j = 0; j < fy.size(); ++j) CHECK_THAT(lines.y[j], WithinAbs(fy[j], 1e-14));

  const auto m = lbic_mesh();
  CHECK(m->cells.size() == 53 * 23);
  CHECK(m->cells.size() == 1219);
  CHECK_THAT(total_volume(*m), WithinRel(32.0, 1e-13));
  CHECK_THAT(m->region_measure("p"), WithinRel(8.0, 1e-13));
  CHECK_THAT(m->region_measure("n"), WithinRel(24.0, 1e-13));
  double vmin = INFINITY, vmax = 0.0;
  for (const auto& c : m->cells) {
    vmin = std::min(vmin, c.volume);
    vmax = std::max(vmax, c.volume);
  }
  // Stated range 6.06e-3 .. 2.83e-2, within 10 %.
  CHECK(vmin >= 6.06e-3 * 0.9);
  CHECK(vmin <= 6.06e-3 * 1.1);
  CHECK(vmax >= 2.83e-2 * 0.9);
  CHECK(vmax <= 2.83e-2 * 1.1);
  CHECK(m->connected());
  CHECK_THAT(m->boundary_measure(m->boundary_tag("left")), WithinRel(4.0, 1e-14));
}

TEST_CASE("Transmissibilities are positive and geometric") {
  const auto m = lbic_mesh();
  for (const auto& f : m->faces) {
    REQUIRE(f.area > 0.0);
    REQUIRE(f.distance > 0.0);
    const auto& a = m->cells[f.left].center;
    const auto& b = m->cells[f.right].center;
    REQUIRE_THAT(f.distance, WithinRel(std::sqrt(squared_distance(a, b)), 1e-14));
  }
}

TEST_CASE("Region pieces tile each node box") {
  for (const auto& mesh : {psc_mesh(), lbic_mesh()}) {
    for (const auto& c : mesh->cells) {
      double s = 0.0;
      for (const auto& p : c.pieces) s += p.volume;
      REQUIRE_THAT(s, WithinRel(c.volume, 1e-13));
    }
  }
}

TEST_CASE("Degenerate meshes are rejected") {
  CHECK_THROWS_AS(build_interval_mesh({}, 0.1), MeshError);
  CHECK_THROWS_AS(build_interval_mesh({{"a", 0.0, 1.0}}, 0.0), MeshError);
  CHECK_THROWS_AS(build_rect_mesh(Box{{0.0, 0.0}, {1.0, 1.0}}, {}, 1, 5), MeshError);
  CHECK_THROWS_AS(build_tensor_mesh({0.0}, {}, {{"a", Box::interval(0.0, 1.0)}}), MeshError);
}

TEST_CASE("Mesh dump round-trips") {
  for (const auto& mesh : {psc_mesh(), lbic_mesh()}) {
    std::stringstream ss;
    write_mesh(ss, *mesh);
    const FvMesh back = read_mesh(ss);
    std::stringstream again;
    write_mesh(again, back);
    std::stringstream first;
    write_mesh(first, *mesh);
    CHECK(first.str() == again.str());
    CHECK(back.cells.size() == mesh->cells.size());
    CHECK(back.faces.size() == mesh->faces.size());
  }
  std::stringstream bad("ddsim-mesh 99\n");
  CHECK_THROWS_AS(read_mesh(bad), MeshError);
}
