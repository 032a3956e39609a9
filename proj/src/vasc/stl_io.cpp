#include "fqf/vasc/stl_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fqf/core/error.hpp"
#include "fqf/vasc/rasterize.hpp"

namespace fqf::vasc {

namespace {

// Moller-Trumbore; returns true and the ray parameter t for ray o + t*d.
bool ray_triangle(const Vec3& o, const Vec3& d, const Triangle& tri, double& t) {
  constexpr double eps = 1e-14;
  Vec3 e1 = tri.b - tri.a;
  Vec3 e2 = tri.c - tri.a;
  Vec3 pv = cross(d, e2);
  double det = dot(e1, pv);
  if (std::abs(det) < eps) return false;
  double inv = 1.0 / det;
  Vec3 tv = o - tri.a;
  double u = dot(tv, pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  Vec3 qv = cross(tv, e1);
  double v = dot(d, qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  t = dot(e2, qv) * inv;
  return true;
}

std::vector<double> row_crossings(const std::vector<const Triangle*>& tris, const Vec3& origin) {
  const Vec3 dir{1, 0, 0};
  std::vector<double> ts;
  for (const Triangle* tri : tris) {
    double t;
    if (ray_triangle(origin, dir, *tri, t)) ts.push_back(t);
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

Vec3 read_vec(std::istringstream& is, const std::string& path) {
  Vec3 v;
  is >> v.x >> v.y >> v.z;
  require(!is.fail(), path, ": malformed vertex or normal");
  return v;
}

}  // namespace

std::vector<Triangle> read_stl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open '", path, "'");
  std::string first;
  f >> first;
  require(first == "solid", path, ": not an ASCII STL (expected 'solid')");
  std::getline(f, first);  // solid name

  std::vector<Triangle> tris;
  std::string tok;
  while (f >> tok) {
    if (tok == "endsolid") return tris;
    require(tok == "facet", path, ": expected 'facet', got '", tok, "'");
    std::string line;
    f >> tok;  // "normal"
    require(tok == "normal", path, ": expected 'normal'");
    std::getline(f, line);  // skip stored normal; recomputed from winding
    f >> tok;
    require(tok == "outer", path, ": expected 'outer loop'");
    f >> tok;
    Triangle tri;
    for (Vec3* v : {&tri.a, &tri.b, &tri.c}) {
      f >> tok;
      require(tok == "vertex", path, ": expected 'vertex'");
      std::getline(f, line);
      std::istringstream is(line);
      *v = read_vec(is, path);
    }
    f >> tok;
    require(tok == "endloop", path, ": expected 'endloop'");
    f >> tok;
    require(tok == "endfacet", path, ": expected 'endfacet'");
    tris.push_back(tri);
  }
  fail(path, ": missing 'endsolid'");
}

void write_stl(const std::string& path, const std::vector<Triangle>& tris,
               const std::string& name) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot open '", path, "' for writing");
  f.precision(9);
  f << "solid " << name << '\n';
  for (const Triangle& t : tris) {
    Vec3 n = normalized(cross(t.b - t.a, t.c - t.a));
    f << "  facet normal " << n.x << ' ' << n.y << ' ' << n.z << '\n';
    f << "    outer loop\n";
    for (const Vec3* v : {&t.a, &t.b, &t.c})
      f << "      vertex " << v->x << ' ' << v->y << ' ' << v->z << '\n';
    f << "    endloop\n  endfacet\n";
  }
  f << "endsolid " << name << '\n';
  require(f.good(), "write to '", path, "' failed");
}

std::vector<Triangle> tessellate_tree(const VesselTree& tree, int sides) {
  require(sides >= 3, "tube needs at least 3 sides");
  std::vector<Triangle> tris;
  for (const VesselSegment& seg : tree.segments) {
    Vec3 axis = seg.direction();
    Vec3 guess = std::abs(axis.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
    Vec3 e1 = normalized(cross(guess, axis));
    Vec3 e2 = cross(axis, e1);
    int rings = seg.anomaly == Anomaly::none ? 1 : 8;

    auto ring_point = [&](int ring, int side) {
      double t = static_cast<double>(ring) / rings;
      double r = segment_radius(seg, t);
      double ang = 2.0 * std::numbers::pi * side / sides;
      Vec3 center = seg.start + (seg.end - seg.start) * t;
      return center + e1 * (r * std::cos(ang)) + e2 * (r * std::sin(ang));
    };

    for (int ring = 0; ring < rings; ++ring)
      for (int s = 0; s < sides; ++s) {
        int sn = (s + 1) % sides;
        Vec3 p00 = ring_point(ring, s), p01 = ring_point(ring, sn);
        Vec3 p10 = ring_point(ring + 1, s), p11 = ring_point(ring + 1, sn);
        tris.push_back({p00, p01, p11});
        tris.push_back({p00, p11, p10});
      }
    for (int s = 0; s < sides; ++s) {
      int sn = (s + 1) % sides;
      tris.push_back({seg.start, ring_point(0, sn), ring_point(0, s)});
      tris.push_back({seg.end, ring_point(rings, s), ring_point(rings, sn)});
    }
  }
  return tris;
}

bool point_in_mesh(const std::vector<Triangle>& tris, const Vec3& p) {
  std::vector<const Triangle*> ptrs;
  ptrs.reserve(tris.size());
  for (const Triangle& t : tris) ptrs.push_back(&t);

  // A ray grazing a shared edge is reported by both adjacent triangles.
  // Detect coincident or odd full-line crossings and re-cast slightly off.
  Vec3 o = p;
  for (int attempt = 0; attempt < 6; ++attempt) {
    std::vector<double> ts = row_crossings(ptrs, o);
    bool degenerate = ts.size() % 2 == 1;
    for (std::size_t i = 0; i + 1 < ts.size() && !degenerate; ++i)
      if (ts[i + 1] - ts[i] < 1e-12) degenerate = true;
    if (!degenerate) {
      int crossings = 0;
      for (double t : ts)
        if (t > 0.0) ++crossings;
      return crossings % 2 == 1;
    }
    o.y += 1e-9 * (attempt + 1);
    o.z += 7e-10 * (attempt + 1);
  }
  return false;
}

VoxelGrid rasterize_mesh(const std::vector<Triangle>& tris, std::array<int, 3> dims, Vec3 spacing,
                         Vec3 origin) {
  VoxelGrid grid(dims, spacing, origin, 1);
  double x_start = origin.x - spacing.x;

  // Bucket triangles by the grid rows their yz bounding box covers.
  std::vector<std::vector<const Triangle*>> rows(
      static_cast<std::size_t>(dims[1]) * dims[2]);
  for (const Triangle& t : tris) {
    double ylo = std::min({t.a.y, t.b.y, t.c.y}), yhi = std::max({t.a.y, t.b.y, t.c.y});
    double zlo = std::min({t.a.z, t.b.z, t.c.z}), zhi = std::max({t.a.z, t.b.z, t.c.z});
    int j0 = std::max(0, static_cast<int>(std::floor((ylo - origin.y) / spacing.y)));
    int j1 = std::min(dims[1] - 1, static_cast<int>(std::ceil((yhi - origin.y) / spacing.y)));
    int k0 = std::max(0, static_cast<int>(std::floor((zlo - origin.z) / spacing.z)));
    int k1 = std::min(dims[2] - 1, static_cast<int>(std::ceil((zhi - origin.z) / spacing.z)));
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j) rows[static_cast<std::size_t>(k) * dims[1] + j].push_back(&t);
  }

  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j) {
      const auto& bucket = rows[static_cast<std::size_t>(k) * dims[1] + j];
      if (bucket.empty()) continue;
      Vec3 o{x_start, origin.y + j * spacing.y, origin.z + k * spacing.z};
      std::vector<double> ts = row_crossings(bucket, o);
      for (int attempt = 0; ts.size() % 2 == 1 && attempt < 5; ++attempt) {
        o.y += 1e-3 * spacing.y;
        o.z += 7e-4 * spacing.z;
        ts = row_crossings(bucket, o);
      }
      if (ts.size() % 2 == 1) continue;  // unresolvable graze; leave row empty
      std::size_t c = 0;
      for (int i = 0; i < dims[0]; ++i) {
        double x = origin.x + i * spacing.x - x_start;
        while (c < ts.size() && ts[c] < x) ++c;
        if (c % 2 == 1) grid.at(i, j, k) = 1.0;
      }
    }
  return grid;
}

}  // namespace fqf::vasc
