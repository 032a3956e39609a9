#pragma once

#include <string>
#include <vector>

#include "fqf/core/grid.hpp"
#include "fqf/vasc/tree.hpp"

namespace fqf::vasc {

struct Triangle {
  Vec3 a, b, c;
};

// ASCII STL only; binary files are rejected with a clear error.
std::vector<Triangle> read_stl(const std::string& path);
void write_stl(const std::string& path, const std::vector<Triangle>& tris,
               const std::string& name = "vessel");

// Closed polygonal tube per segment (sides-gon cross sections, capped ends,
// extra rings where an anomaly bulges the wall).  Meant for export and
// visualization; per-segment tubes overlap at junctions.
std::vector<Triangle> tessellate_tree(const VesselTree& tree, int sides = 24);

// Parity test along a +x ray; the mesh must be watertight.
bool point_in_mesh(const std::vector<Triangle>& tris, const Vec3& p);

// Inside/outside fill by x-ray parity per grid row.  Rows with degenerate
// crossings (edge grazes) are re-cast with a jittered origin.
VoxelGrid rasterize_mesh(const std::vector<Triangle>& tris, std::array<int, 3> dims, Vec3 spacing,
                         Vec3 origin);

}  // namespace fqf::vasc
