#include "fqf/vasc/rasterize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fqf/core/error.hpp"

namespace fqf::vasc {

namespace {

double anomaly_factor(const VesselSegment& seg, double t) {
  if (seg.anomaly == Anomaly::none) return 1.0;
  double bump = std::sin(std::numbers::pi * t);
  bump *= bump;
  return 1.0 + (seg.anomaly_scale - 1.0) * bump;
}

}  // namespace

double segment_radius(const VesselSegment& seg, double t) {
  t = std::clamp(t, 0.0, 1.0);
  double d = seg.start_diameter + (seg.end_diameter - seg.start_diameter) * t;
  return 0.5 * d * anomaly_factor(seg, t);
}

SegmentHit locate(const VesselTree& tree, const Vec3& p) {
  SegmentHit best;
  double best_ratio = 1.0;
  for (std::size_t i = 0; i < tree.segments.size(); ++i) {
    const VesselSegment& seg = tree.segments[i];
    double len = seg.length();
    Vec3 u = seg.direction();
    double s = dot(p - seg.start, u);
    if (s < 0.0 || s > len) continue;
    Vec3 radial_vec = p - seg.start - u * s;
    double radial = norm(radial_vec);
    double r = segment_radius(seg, s / len);
    if (r <= 0.0) continue;
    double ratio = radial / r;
    if (ratio <= best_ratio) {
      best_ratio = ratio;
      best.segment = static_cast<int>(i);
      best.axial = s;
      best.radial = radial;
    }
  }
  return best;
}

bool point_in_tree(const VesselTree& tree, const Vec3& p) { return locate(tree, p).segment >= 0; }

VoxelGrid rasterize_tree(const VesselTree& tree, std::array<int, 3> dims, Vec3 spacing,
                         Vec3 origin, EdgeProfile profile, double sigma_rel) {
  require(sigma_rel > 0.0, "sigma_rel must be positive");
  VoxelGrid grid(dims, spacing, origin, 1);

  for (const VesselSegment& seg : tree.segments) {
    double len = seg.length();
    Vec3 u = seg.direction();
    double r_max = 0.5 * std::max(seg.start_diameter, seg.end_diameter) *
                   std::max(1.0, seg.anomaly_scale);
    double margin = profile == EdgeProfile::hard ? r_max : r_max * (1.0 + 3.0 * sigma_rel);

    Vec3 lo{std::min(seg.start.x, seg.end.x) - margin, std::min(seg.start.y, seg.end.y) - margin,
            std::min(seg.start.z, seg.end.z) - margin};
    Vec3 hi{std::max(seg.start.x, seg.end.x) + margin, std::max(seg.start.y, seg.end.y) + margin,
            std::max(seg.start.z, seg.end.z) + margin};
    Vec3 glo = grid.to_grid(lo), ghi = grid.to_grid(hi);
    int i0 = std::max(0, static_cast<int>(std::floor(glo.x)));
    int j0 = std::max(0, static_cast<int>(std::floor(glo.y)));
    int k0 = std::max(0, static_cast<int>(std::floor(glo.z)));
    int i1 = std::min(dims[0] - 1, static_cast<int>(std::ceil(ghi.x)));
    int j1 = std::min(dims[1] - 1, static_cast<int>(std::ceil(ghi.y)));
    int k1 = std::min(dims[2] - 1, static_cast<int>(std::ceil(ghi.z)));

    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          Vec3 p = grid.node_position(i, j, k);
          double s = dot(p - seg.start, u);
          if (s < 0.0 || s > len) continue;
          Vec3 radial_vec = p - seg.start - u * s;
          double radial = norm(radial_vec);
          double r = segment_radius(seg, s / len);
          double v;
          if (radial <= r) {
            v = 1.0;
          } else if (profile == EdgeProfile::hard) {
            continue;
          } else {
            double e = radial - r;
            double sigma = sigma_rel * r;
            v = std::exp(-0.5 * e * e / (sigma * sigma));
          }
          double& cell = grid.at(i, j, k);
          cell = std::max(cell, v);
        }
  }
  return grid;
}

double tree_volume(const VesselTree& tree) {
  double total = 0.0;
  for (const VesselSegment& seg : tree.segments) {
    double r0 = 0.5 * seg.start_diameter, r1 = 0.5 * seg.end_diameter;
    total += std::numbers::pi * seg.length() / 3.0 * (r0 * r0 + r0 * r1 + r1 * r1);
  }
  return total;
}

}  // namespace fqf::vasc
