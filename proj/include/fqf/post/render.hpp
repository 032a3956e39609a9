#pragma once

#include <string>
#include <vector>

#include "fqf/beamform/das.hpp"
#include "fqf/core/grid.hpp"
#include "fqf/core/vec.hpp"

namespace fqf::post {

// Power Doppler: per-voxel sum of |IQ|^2 across the ensemble.
VoxelGrid power_doppler(const std::vector<beamform::IqVolume>& ensemble);

enum class DbScale { amplitude, power };  // 20 log10 vs 10 log10

// Log-compress to [0,1]: dB relative to the volume peak, clipped to
// [-dynamic_range_db, 0] and mapped affinely onto [0,1].  Zero voxels land at
// 0; an all-zero volume is an error.
VoxelGrid render_db(const VoxelGrid& volume, double dynamic_range_db, DbScale scale);

// Envelope image: |IQ| log-compressed at the given dynamic range.
VoxelGrid bmode(const beamform::IqVolume& iq, double dynamic_range_db = 75.0);

// Maximum intensity projection: collapse one axis (0/1/2 = x/y/z) to a
// singleton by taking the per-line maximum.
VoxelGrid mip(const VoxelGrid& volume, int axis);

// Reference perfusion image: Gaussian-splatted, time-aggregated blood
// scatterer occupancy on the reconstruction grid, peak-normalized to [0,1].
// This is the framework's own definition of the imaging target, not a
// reconstruction product.  sigma_voxels is the kernel width in voxel units;
// the splat is truncated at three sigma.
VoxelGrid ground_truth_pd(const std::vector<std::vector<Vec3>>& positions_per_frame,
                          const beamform::GridSpec& grid, double sigma_voxels);

// Binary 8-bit PGM (P5) of a [0,1] image.  At least one grid axis must be a
// singleton; the two displayed axes map to width (the earlier axis) and
// height.  Values are clamped to [0,1] and quantized to 255 levels.
void write_pgm(const std::string& path, const VoxelGrid& image);

}  // namespace fqf::post
