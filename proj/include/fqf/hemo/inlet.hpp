#pragma once

#include <span>
#include <vector>

#include "fqf/core/rng.hpp"
#include "fqf/hemo/flow_field.hpp"

namespace fqf::hemo {

// Flux-weighted sampling density on the inlet disk.
struct InletDensity {
  InletPlane plane;
  std::vector<Vec3> points;     // regular lattice restricted to the disk
  std::vector<double> weights;  // non-negative, sum to 1
  double lattice_pitch = 0.0;   // spacing between lattice points, meters
};

// Lattice of roughly n_samples points covering the inlet disk; weights
// proportional to the positive downstream flux max(0, v . n).  Throws when
// no point carries flux.
InletDensity inlet_density(const FlowField& field, int n_samples);

// Draws one entry point: lattice cell by weight, then uniform jitter within
// the cell (clamped to the disk).
Vec3 sample_inlet_point(const InletDensity& density, CounterRng& rng);

struct BackpropResult {
  std::vector<Vec3> points;     // inlet-plane crossings, one per crossing seed
  std::size_t dropped = 0;      // seeds whose backward path never crossed
};

// Integrates each seed along dp/dt = -v(p) until its path crosses the inlet
// plane (crossing located by linear interpolation inside the step) or leaves
// the vessel.
BackpropResult backpropagate_inlet(const FlowField& field, std::span<const Vec3> seeds,
                                   double max_time = 60.0);

// Keeps points within distance_tol of the plane and within the bounding
// radius of the inlet axis.
std::vector<Vec3> filter_inlet_points(std::span<const Vec3> points, const InletPlane& plane,
                                      double distance_tol);

}  // namespace fqf::hemo
