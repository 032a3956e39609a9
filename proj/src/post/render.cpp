#include "fqf/post/render.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::post {

namespace {

VoxelGrid grid_like(const beamform::GridSpec& g) {
  return VoxelGrid(g.dims, g.spacing, g.origin);
}

}  // namespace

VoxelGrid power_doppler(const std::vector<beamform::IqVolume>& ensemble) {
  require(!ensemble.empty(), "power_doppler needs at least one frame");
  const auto& first = ensemble.front();
  std::size_t n = first.grid.num_points();
  require(n > 0, "power_doppler needs a nonempty grid");
  for (const auto& frame : ensemble) {
    require(frame.grid.dims == first.grid.dims, "ensemble frames must share one grid");
    require(frame.values.size() == n, "frame value count must match the grid");
  }

  VoxelGrid pd = grid_like(first.grid);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      double acc = 0.0;
      for (const auto& frame : ensemble) acc += std::norm(frame.values[v]);
      pd.data()[v] = acc;
    }
  });
  return pd;
}

VoxelGrid render_db(const VoxelGrid& volume, double dynamic_range_db, DbScale scale) {
  require(volume.components() == 1, "render_db expects a scalar volume");
  require(!volume.data().empty(), "render_db needs a nonempty volume");
  require(dynamic_range_db > 0.0, "dynamic range must be positive, got ", dynamic_range_db);

  double peak = 0.0;
  for (double v : volume.data()) peak = std::max(peak, std::abs(v));
  require(peak > 0.0, "render_db needs a nonzero volume");

  const double factor = scale == DbScale::amplitude ? 20.0 : 10.0;
  VoxelGrid out(volume.dims(), volume.spacing(), volume.origin());
  parallel_for(volume.data().size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double mag = std::abs(volume.data()[i]);
      if (mag <= 0.0) {
        out.data()[i] = 0.0;
        continue;
      }
      double db = factor * std::log10(mag / peak);
      out.data()[i] = std::clamp((db + dynamic_range_db) / dynamic_range_db, 0.0, 1.0);
    }
  });
  return out;
}

VoxelGrid bmode(const beamform::IqVolume& iq, double dynamic_range_db) {
  std::size_t n = iq.grid.num_points();
  require(n > 0 && iq.values.size() == n, "bmode needs an IQ volume matching its grid");
  VoxelGrid env = grid_like(iq.grid);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) env.data()[v] = std::abs(iq.values[v]);
  });
  return render_db(env, dynamic_range_db, DbScale::amplitude);
}

VoxelGrid mip(const VoxelGrid& volume, int axis) {
  require(axis >= 0 && axis < 3, "mip axis must be 0, 1, or 2, got ", axis);
  require(volume.components() == 1, "mip expects a scalar volume");
  require(!volume.data().empty(), "mip needs a nonempty volume");

  auto dims = volume.dims();
  auto out_dims = dims;
  out_dims[axis] = 1;
  VoxelGrid out(out_dims, volume.spacing(), volume.origin());
  std::size_t n = out.num_nodes();
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t flat = begin; flat < end; ++flat) {
      std::size_t nx = out_dims[0], ny = out_dims[1];
      int i = static_cast<int>(flat % nx);
      int j = static_cast<int>((flat / nx) % ny);
      int k = static_cast<int>(flat / (nx * ny));
      double best = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < dims[axis]; ++t) {
        int ii = axis == 0 ? t : i, jj = axis == 1 ? t : j, kk = axis == 2 ? t : k;
        best = std::max(best, volume.at(ii, jj, kk));
      }
      out.data()[flat] = best;
    }
  });
  return out;
}

VoxelGrid ground_truth_pd(const std::vector<std::vector<Vec3>>& positions_per_frame,
                          const beamform::GridSpec& grid, double sigma_voxels) {
  require(!positions_per_frame.empty(), "ground_truth_pd needs at least one frame");
  require(grid.num_points() > 0, "ground_truth_pd needs a nonempty grid");
  require(sigma_voxels > 0.0, "kernel sigma must be positive, got ", sigma_voxels);

  VoxelGrid pd = grid_like(grid);
  const double reach = 3.0 * sigma_voxels;
  const double reach2 = reach * reach;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma_voxels * sigma_voxels);
  const auto& dims = grid.dims;

  for (const auto& frame : positions_per_frame) {
    for (const auto& p : frame) {
      double ux = (p.x - grid.origin.x) / grid.spacing.x;
      double uy = (p.y - grid.origin.y) / grid.spacing.y;
      double uz = (p.z - grid.origin.z) / grid.spacing.z;
      require(std::isfinite(ux) && std::isfinite(uy) && std::isfinite(uz),
              "scatterer positions must be finite");
      int i0 = std::max(0, static_cast<int>(std::ceil(ux - reach)));
      int i1 = std::min(dims[0] - 1, static_cast<int>(std::floor(ux + reach)));
      int j0 = std::max(0, static_cast<int>(std::ceil(uy - reach)));
      int j1 = std::min(dims[1] - 1, static_cast<int>(std::floor(uy + reach)));
      int k0 = std::max(0, static_cast<int>(std::ceil(uz - reach)));
      int k1 = std::min(dims[2] - 1, static_cast<int>(std::floor(uz + reach)));
      for (int k = k0; k <= k1; ++k)
        for (int j = j0; j <= j1; ++j)
          for (int i = i0; i <= i1; ++i) {
            double d2 = (i - ux) * (i - ux) + (j - uy) * (j - uy) + (k - uz) * (k - uz);
            if (d2 > reach2) continue;
            pd.at(i, j, k) += std::exp(-d2 * inv_two_sigma2);
          }
    }
  }

  double peak = *std::max_element(pd.data().begin(), pd.data().end());
  if (peak > 0.0)
    for (double& v : pd.data()) v /= peak;
  return pd;
}

void write_pgm(const std::string& path, const VoxelGrid& image) {
  require(image.components() == 1, "write_pgm expects a scalar image");
  require(!image.data().empty(), "write_pgm needs a nonempty image");
  const auto& dims = image.dims();
  int axes[2];
  int picked = 0;
  for (int ax = 0; ax < 3; ++ax)
    if (dims[ax] > 1 && picked < 2) axes[picked++] = ax;
  require(picked < 2 || dims[3 - axes[0] - axes[1]] == 1,
          "write_pgm needs an image with a singleton axis, got dims ", dims[0], "x", dims[1], "x",
          dims[2]);
  for (int ax = 0; ax < 3 && picked < 2; ++ax)
    if (dims[ax] == 1 && (picked == 0 || axes[0] != ax)) axes[picked++] = ax;
  int u = axes[0], v = axes[1];

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open ", path, " for writing");
  out << "P5\n" << dims[u] << ' ' << dims[v] << "\n255\n";
  for (int row = 0; row < dims[v]; ++row)
    for (int col = 0; col < dims[u]; ++col) {
      int idx[3] = {0, 0, 0};
      idx[u] = col;
      idx[v] = row;
      double val = std::clamp(image.at(idx[0], idx[1], idx[2]), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(val * 255.0))));
    }
  out.flush();
  require(out.good(), "failed writing ", path);
}

}  // namespace fqf::post
