#pragma once

#include <string>
#include <vector>

#include "fqf/core/vec.hpp"

namespace fqf::vasc {

enum class Anomaly { none, aneurysm, stenosis };

std::string anomaly_name(Anomaly a);
Anomaly parse_anomaly(const std::string& s);

// One straight vessel piece.  Diameter varies linearly from start to end;
// an anomaly scales the local radius at rasterization time without touching
// the nominal diameters, so conservation laws stay checkable on the tree.
struct VesselSegment {
  Vec3 start;
  Vec3 end;
  double start_diameter = 0.0;
  double end_diameter = 0.0;
  int parent = -1;
  int depth = 0;
  Anomaly anomaly = Anomaly::none;
  double anomaly_scale = 1.0;

  Vec3 direction() const { return normalized(end - start); }
  double length() const { return norm(end - start); }
};

struct VesselTree {
  std::vector<VesselSegment> segments;
  double murray_exponent = 3.0;
  double angle_min_deg = 35.0;
  double angle_max_deg = 55.0;

  // Inlet is the root segment start.
  int root() const;
  Vec3 inlet_position() const;
  Vec3 inlet_direction() const;
  double inlet_diameter() const;

  std::vector<std::vector<int>> children() const;
};

struct TreeTolerances {
  double murray_rel_tol = 1e-9;
  double connect_tol = 1e-9;      // meters
  double angle_tol_deg = 1e-6;
  double collinear_tol_deg = 1e-6;
};

// Returns human-readable violations; empty means the tree satisfies
// connectivity, positive finite geometry, non-increasing diameters,
// the radius power-law closure at every multi-child node, and branch
// angles within the configured range (one straight continuation is
// allowed per node).
std::vector<std::string> validate_tree(const VesselTree& tree, const TreeTolerances& tol = {});

// Daughter diameters for a two-way split: fraction phi of the parent's
// d^m conserved flow goes to the first daughter.  Closure is exact.
std::pair<double, double> murray_daughters(double parent_diameter, double phi, double exponent);

void write_tree_json(const std::string& path, const VesselTree& tree);
VesselTree read_tree_json(const std::string& path);

}  // namespace fqf::vasc
