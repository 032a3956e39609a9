#pragma once

#include <vector>

#include "fqf/core/grid.hpp"
#include "fqf/tissue/motion.hpp"

namespace fqf::tissue {

// Block motion in pixels per frame.  valid is false when the block's
// gradient matrix was singular; such vectors carry the neighbor-median
// fill value (zero when no valid neighbor exists).
struct FlowVector {
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
};

struct FlowGrid {
  int blocks_x = 0;
  int blocks_y = 0;
  int window = 0;  // block edge, px

  std::vector<FlowVector> vectors;  // bx + blocks_x * by

  FlowVector& at(int bx, int by) { return vectors[bx + static_cast<std::size_t>(blocks_x) * by]; }
  const FlowVector& at(int bx, int by) const {
    return vectors[bx + static_cast<std::size_t>(blocks_x) * by];
  }
};

// Block-wise least-squares gradient flow from frame_a to frame_b followed
// by component-wise median filtering over a (2 * median_radius + 1)^2 block
// neighborhood.  Frames are single-channel grids with a depth dim of 1;
// blocks tile the image as floor(width / window) by floor(height / window).
// An integer search over shifts up to window / 2 seeds each least-squares
// refinement, so the estimator tracks displacements beyond one pixel.
FlowGrid optical_flow(const VoxelGrid& frame_a, const VoxelGrid& frame_b, int window,
                      int median_radius);

// Lifts 2D flow to tissue motion: in-plane velocity flow * pitch / interval
// with image x mapping to lateral x and image y to depth z, constant across
// elevation.  scale multiplies every velocity.
MotionModel lift_flow_to_motion(const FlowGrid& flow, double pixel_pitch, double frame_interval,
                                double scale = 1.0);

}  // namespace fqf::tissue
