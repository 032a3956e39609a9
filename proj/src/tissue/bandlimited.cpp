#include "fqf/tissue/bandlimited.hpp"

#include <cmath>
#include <numbers>

#include "fqf/core/error.hpp"

namespace fqf::tissue {

double periodic_sinc(double u, int n) {
  require(n >= 1, "grid axis needs at least one node");
  if (n == 1) return 1.0;
  double r = u - std::round(u);
  if (std::abs(r) < 1e-12) {
    // On-node limit: 1 at the impulse node, exact 0 elsewhere.
    double m = std::abs(std::remainder(u, static_cast<double>(n)));
    return m < 0.5 ? 1.0 : 0.0;
  }
  double num = std::sin(std::numbers::pi * u);
  double arg = std::numbers::pi * u / n;
  double den = n % 2 == 0 ? n * std::tan(arg) : n * std::sin(arg);
  return num / den;
}

BandlimitedProjection bandlimited_delta(const Vec3& xi, const VoxelGrid& grid, int support) {
  require(grid.contains(xi), "projection point outside the grid");
  BandlimitedProjection out;
  out.dims = grid.dims();
  out.spacing = grid.spacing();

  Vec3 u = grid.to_grid(xi);
  double coords[3] = {u.x, u.y, u.z};
  for (int p = 0; p < 3; ++p) {
    int n = out.dims[p];
    int lo = 0, hi = n - 1;
    if (support > 0) {
      lo = std::max(0, static_cast<int>(std::ceil(coords[p])) - support);
      hi = std::min(n - 1, static_cast<int>(std::floor(coords[p])) + support);
    }
    out.first[p] = lo;
    out.axis[p].resize(hi - lo + 1);
    for (int j = lo; j <= hi; ++j) out.axis[p][j - lo] = periodic_sinc(coords[p] - j, n);
  }
  return out;
}

double project_sample(const BandlimitedProjection& proj, const VoxelGrid& grid) {
  require(grid.dims() == proj.dims, "projection and grid dims differ");
  require(grid.components() == 1, "projection sampling needs a scalar grid");
  double acc = 0.0;
  for (std::size_t c = 0; c < proj.axis[2].size(); ++c) {
    int k = proj.first[2] + static_cast<int>(c);
    double wz = proj.axis[2][c];
    if (wz == 0.0) continue;
    double acc_y = 0.0;
    for (std::size_t b = 0; b < proj.axis[1].size(); ++b) {
      int j = proj.first[1] + static_cast<int>(b);
      double wy = proj.axis[1][b];
      if (wy == 0.0) continue;
      double acc_x = 0.0;
      std::size_t base = grid.flat(proj.first[0], j, k);
      for (std::size_t a = 0; a < proj.axis[0].size(); ++a)
        acc_x += proj.axis[0][a] * grid.data()[base + a];
      acc_y += wy * acc_x;
    }
    acc += wz * acc_y;
  }
  return acc;
}

}  // namespace fqf::tissue
