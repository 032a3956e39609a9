#pragma once

#include "fqf/core/grid.hpp"
#include "fqf/vasc/tree.hpp"

namespace fqf::vasc {

enum class EdgeProfile { hard, gaussian };

// Local radius of a segment at axial fraction t in [0,1]: the linear
// start/end taper scaled by the anomaly profile, which bulges (aneurysm)
// or pinches (stenosis) smoothly toward the segment midpoint with peak
// factor anomaly_scale.
double segment_radius(const VesselSegment& seg, double t);

struct SegmentHit {
  int segment = -1;      // -1 when outside every segment
  double axial = 0.0;    // meters along the segment axis
  double radial = 0.0;   // meters from the axis
};

// Deepest containing segment (smallest radial/radius ratio).
SegmentHit locate(const VesselTree& tree, const Vec3& p);

bool point_in_tree(const VesselTree& tree, const Vec3& p);

// Occupancy of the tree on a node grid.  hard: 1 inside, 0 outside.
// gaussian: 1 inside, exp(-d^2 / 2 sigma^2) outside where d is the distance
// past the wall and sigma = sigma_rel * local radius.
VoxelGrid rasterize_tree(const VesselTree& tree, std::array<int, 3> dims, Vec3 spacing,
                         Vec3 origin, EdgeProfile profile = EdgeProfile::hard,
                         double sigma_rel = 0.25);

// Analytic volume of the nominal tree (linear taper, anomalies ignored):
// the frustum sum pi L / 3 (r0^2 + r0 r1 + r1^2).
double tree_volume(const VesselTree& tree);

}  // namespace fqf::vasc
