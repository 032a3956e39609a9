#pragma once

#include <array>
#include <vector>

#include "fqf/core/grid.hpp"
#include "fqf/core/vec.hpp"

namespace fqf::tissue {

// Band-limited unit impulse on an N-point periodic grid, evaluated at a
// node offset of u index units: sin(pi u) / (N * Theta(pi u / N)) with
// Theta = tan for even N and sin for odd N.  Equals 1 at u = 0 and 0 at
// every other integer offset.
double periodic_sinc(double u, int n);

// Separable projection weights of a point onto the grid's band-limited
// space: value at node (i,j,k) is axis[0][i] * axis[1][j] * axis[2][k].
struct BandlimitedProjection {
  std::array<int, 3> dims{};
  Vec3 spacing;
  // Per-axis kernels over the truncated support [first[p], first[p]+size).
  std::array<std::vector<double>, 3> axis;
  std::array<int, 3> first{};
  double quadrature_weight = 1.0;  // C = 1/A with unit node area in grid units

  double value(int i, int j, int k) const {
    int a = i - first[0], b = j - first[1], c = k - first[2];
    if (a < 0 || b < 0 || c < 0 || a >= static_cast<int>(axis[0].size()) ||
        b >= static_cast<int>(axis[1].size()) || c >= static_cast<int>(axis[2].size()))
      return 0.0;
    return axis[0][a] * axis[1][b] * axis[2][c];
  }
};

// Projection of xi onto the grid.  support <= 0 keeps every node per axis;
// a positive value truncates to the nodes within `support` index units of
// xi, which bounds work per scatterer.  Throws when xi is out of bounds.
BandlimitedProjection bandlimited_delta(const Vec3& xi, const VoxelGrid& grid, int support = 0);

// Projection-weighted sum of a scalar grid over the truncated support.
double project_sample(const BandlimitedProjection& proj, const VoxelGrid& grid);

}  // namespace fqf::tissue
