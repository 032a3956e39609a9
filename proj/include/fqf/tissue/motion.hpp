#pragma once

#include <vector>

#include "fqf/core/grid.hpp"
#include "fqf/core/vec.hpp"
#include "fqf/tissue/cloud.hpp"

namespace fqf::tissue {

enum class BoundaryRule { freeze, wrap };

// Rigid, sampled, or image-derived tissue motion.  constant translates,
// rotation spins about an axis through `center`, field integrates a
// time-ordered sequence of sampled velocity grids, flow_derived integrates
// an in-plane (x, z) velocity plane replicated along elevation.
struct MotionModel {
  enum class Kind { constant, rotation, field, flow_derived };

  Kind kind = Kind::constant;
  Vec3 velocity{};  // constant: m/s

  Vec3 center{};         // rotation: a point on the axis
  Vec3 axis{0, 0, 1};    // rotation: unit direction
  double angular_velocity = 0.0;  // rad/s

  std::vector<double> times;      // field: strictly increasing sample times
  std::vector<VoxelGrid> fields;  // field: one 3-component grid per time

  VoxelGrid plane;  // flow_derived: 3-component, elevation dim of 1

  double velocity_scale = 1.0;  // multiplies every evaluated velocity

  // Positions leaving `region` (when set) freeze at the boundary or wrap
  // periodically.  field defaults its region to the grid bounds.
  BoundaryRule boundary = BoundaryRule::freeze;
  bool has_region = false;
  Box region{};
};

MotionModel constant_motion(const Vec3& velocity);
MotionModel rotation_motion(const Vec3& center, const Vec3& axis, double angular_velocity);
MotionModel field_motion(std::vector<double> times, std::vector<VoxelGrid> fields);

// Checks axis normalization, time ordering, and grid shapes.
void validate_motion(const MotionModel& model);

// Velocity of the model at a point and absolute time, including the scale
// factor.  Sampled kinds clamp to their grid bounds.
Vec3 velocity_at(const MotionModel& model, const Vec3& p, double t);

// Moves every scatterer from t0 to t0 + dt.  constant and rotation advance
// in closed form; sampled kinds use adaptive embedded RK2(3) steps.
ScattererCloud advect(const ScattererCloud& cloud, const MotionModel& model, double t0,
                      double dt);

}  // namespace fqf::tissue
