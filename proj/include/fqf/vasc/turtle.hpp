#pragma once

#include <string>

#include "fqf/core/rng.hpp"
#include "fqf/core/vec.hpp"
#include "fqf/vasc/tree.hpp"

namespace fqf::vasc {

struct TurtleParams {
  double step_length = 2.0e-3;        // meters, at depth 0
  double step_decay = 0.85;           // per bracket depth
  double angle_min_deg = 35.0;
  double angle_max_deg = 55.0;
  double root_diameter = 2.0e-3;      // meters
  double murray_exponent = 3.0;
  double taper = 1.0;                 // end/start diameter within a segment
  double min_diameter = 2.0e-5;       // subtrees thinner than this are dropped
  double split_low = 0.3;             // sibling weight range for d^m splits
  double split_high = 0.7;
  double aneurysm_prob = 0.0;
  double stenosis_prob = 0.0;
  double aneurysm_scale_min = 1.5;
  double aneurysm_scale_max = 2.5;
  double stenosis_scale_min = 0.3;
  double stenosis_scale_max = 0.6;
  Vec3 start_position{0, 0, 0};
  Vec3 start_heading{0, 0, 1};
};

// Walks a bracketed turtle string into a vessel tree.  Orientation symbols
// rotate by an angle drawn uniformly from the configured range, so every
// bracketed daughter leaves its parent at an in-range angle by construction.
// Diameters are assigned top-down: a straight continuation inherits the
// parent diameter; at multi-child nodes the parent's d^m is split across
// children with weights drawn from [split_low, split_high], which closes the
// power law exactly.  Children falling below min_diameter are removed and
// their share redistributed over the surviving siblings.
VesselTree interpret(const std::string& turtle_string, const TurtleParams& params,
                     CounterRng& rng);

}  // namespace fqf::vasc
