#pragma once

#include <string>
#include <utility>

#include "fqf/core/grid.hpp"
#include "fqf/core/vec.hpp"

namespace fqf::hemo {

struct InletPlane {
  Vec3 point;
  Vec3 normal;      // unit, pointing downstream into the vessel
  double radius = 0.0;
};

struct Fluid {
  double density = 1056.0;               // kg/m^3
  double kinematic_viscosity = 3.27e-6;  // m^2/s
};

// Sampled velocity field with a binary vessel mask on the same grid.
// Velocity is zero wherever the mask is zero.
struct FlowField {
  VoxelGrid velocity;  // 3 components, m/s
  VoxelGrid mask;      // 1 component, values in {0,1}
  InletPlane inlet;
  Fluid fluid;
};

// Throws unless: grids share geometry, mask is binary and nonempty,
// velocity vanishes off-mask, and the inlet plane touches masked nodes.
void validate_flow_field(const FlowField& field);

struct Tube {
  Vec3 start;
  Vec3 end;
  double radius = 0.0;
};

// Axial parabolic profile v(r) = v_max (1 - r^2/R^2) inside the tube,
// zero outside; mask is the tube interior; inlet is the start disk.
FlowField poiseuille_field(const Tube& tube, double v_max, std::array<int, 3> dims, Vec3 spacing,
                           Vec3 origin, Fluid fluid = {});

void write_flow_field(const std::string& path, const FlowField& field);

struct ImportReport {
  FlowField field;
  std::size_t zeroed_velocity_nodes = 0;  // off-mask samples forced to zero
};

ImportReport import_flow(const std::string& path);

// Trilinear velocity at a point; throws when the point leaves the grid.
Vec3 sample_velocity(const FlowField& field, const Vec3& p);

// Integrator-facing variants: coordinates clamp to the grid box instead of
// throwing, so trial stages near the boundary stay evaluable.
Vec3 sample_velocity_clamped(const FlowField& field, const Vec3& p);
double sample_mask_clamped(const FlowField& field, const Vec3& p);

}  // namespace fqf::hemo
