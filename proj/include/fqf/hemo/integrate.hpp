#pragma once

#include <vector>

#include "fqf/hemo/flow_field.hpp"

namespace fqf::hemo {

struct IntegrateOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;   // meters
  double min_step = 1e-9;  // seconds
  double max_step = 0.0;   // seconds; <= 0 means uncapped
  bool record_path = false;
  bool backward = false;   // integrate dp/dt = -v(p)
};

struct PathSample {
  double t = 0.0;
  Vec3 p;
};

struct Trajectory {
  Vec3 end;
  double end_time = 0.0;
  bool exited = false;     // left the mask (or grid) before the duration ran out
  double exit_time = 0.0;  // valid when exited
  std::vector<PathSample> path;  // filled when record_path; always has >= 2 samples
};

// Solves dp/dt = v(p) with the Bogacki-Shampine embedded 2(3) pair.  The
// third-order solution is propagated; a step is accepted when the embedded
// error estimate satisfies err <= abs_tol + rel_tol * |p|.  Step size grows
// at most 5x and shrinks at least 5x per retry, with safety factor 0.9.
// Integration stops at `duration`, or earlier when the interpolated mask
// falls below 1/2 (exit flagged with the time of the accepted step).
// Throws when the controller underflows min_step.
Trajectory integrate_trajectory(const FlowField& field, const Vec3& p0, double duration,
                                const IntegrateOptions& opts = {});

}  // namespace fqf::hemo
