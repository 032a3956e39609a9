#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fqf/beamform/iq.hpp"
#include "fqf/core/vec.hpp"
#include "fqf/rf/transducer.hpp"

namespace fqf::beamform {

// Reconstruction grid: voxel (i,j,k) sits at origin + (i,j,k) * spacing and
// linear index i + nx * (j + ny * k) (x fastest), matching VoxelGrid.
struct GridSpec {
  std::array<int, 3> dims{0, 0, 0};
  Vec3 spacing{1, 1, 1};
  Vec3 origin{0, 0, 0};

  std::size_t num_points() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  Vec3 point(std::size_t flat) const {
    std::size_t nx = dims[0], ny = dims[1];
    std::size_t i = flat % nx, j = (flat / nx) % ny, k = flat / (nx * ny);
    return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
  }
};

// Voxel-range partition for memory-bounded reconstruction.  The accumulator
// estimate is 16 bytes per voxel per transmit; n_chunks is the ceiling of
// that total over the budget, bumped only when needed so that every chunk's
// own estimate also fits the budget.
struct ChunkPlan {
  std::size_t n_points = 0;
  int n_angles = 0;
  std::size_t budget_bytes = 0;
  int n_chunks = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // [begin, end)

  std::size_t max_chunk_points() const;
};

ChunkPlan plan_chunks(std::size_t n_points, int n_angles, std::size_t budget_bytes);

// Sparse delay-and-sum operator for one chunk of voxels and one transmit.
// Rows are chunk voxels; columns index the vectorized time-major signal,
// col = t * n_elements + e.  Each (voxel, element) pair holds at most two
// entries (linear interpolation over the bracketing samples) whose values are
// the interpolation weight rotated by exp(+i*2*pi*f_c*tau) for total delay
// tau.  padded_samples >= recorded_samples extends the column space so taps
// landing past the recording reference implicit zeros.
struct DelayMatrix {
  std::size_t rows = 0;
  int n_elements = 0;
  int recorded_samples = 0;
  int padded_samples = 0;
  double angle = 0.0;
  int interp_order = 1;
  std::vector<std::size_t> row_ptr;          // rows + 1
  std::vector<std::int32_t> col_idx;
  std::vector<std::complex<double>> values;
  std::size_t out_of_window = 0;  // (voxel, element) pairs with no recorded tap

  std::size_t cols() const {
    return static_cast<std::size_t>(padded_samples) * n_elements;
  }
  std::size_t bytes() const;
};

struct BeamformParams {
  double c = 1540.0;
  double center_frequency = 0.0;  // demodulation and rotation frequency
  double f_number = 1.5;          // receive aperture cut; <= 0 disables
  int interp_order = 1;           // 1 = linear, 0 = nearest sample
  int lowpass_taps = 33;
};

// Plane-wave transmit arrival at p is (x*sin a + z*cos a - min_n(x_n*sin a))/c,
// zero-referenced like plane_wave_delays; receive delay is |p - element|/c.
DelayMatrix build_delay_matrix(std::span<const Vec3> voxels, const rf::TxEvent& tx,
                               const rf::Transducer& td, const BeamformParams& bp,
                               double sampling_rate, double t0, int n_time_samples);

// y[row] = sum over entries of value * iq[col], treating columns at or past
// the recorded span as zero (the implicit zero padding).
void apply_delay_matrix(const DelayMatrix& m, const IqFrame& iq, std::complex<double>* out);

struct IqVolume {
  GridSpec grid;
  int frame_index = 0;  // zero-based
  int n_angles = 0;
  std::vector<std::complex<double>> values;  // flat, x fastest
};

struct DasOptions {
  std::size_t memory_budget_bytes = 100'000'000;  // per-chunk IQ accumulator cap
  std::size_t matrix_budget_bytes = 512'000'000;  // resident delay-matrix cap per chunk
  bool cache_matrices = true;   // build each (chunk, tx) matrix once, reuse across frames
  std::string work_dir;         // chunk/frame files; empty -> fresh temp dir
  bool write_frames = false;    // persist Frame_<i>.fqf
  bool keep_chunk_files = false;
};

struct DasStats {
  int chunks = 0;
  int matrix_builds = 0;
  std::size_t out_of_window = 0;
  std::size_t matrix_bytes_peak = 0;       // resident matrices, worst chunk
  std::size_t accumulator_bytes_peak = 0;  // 16 * chunk points * n_angles, worst chunk
};

// Chunked delay-and-sum reconstruction: per chunk, build (or rebuild, when
// caching is off) the per-transmit matrices, apply them to every frame's
// demodulated signals, average over transmits, and persist IQ_CHUNK_<k>.fqf;
// then assemble per-frame volumes by concatenating chunk segments in index
// order.  frames is indexed [frame][angle]; all share sampling rate, length,
// and the per-angle transmit event.
std::vector<IqVolume> das_reconstruct(const std::vector<std::vector<rf::RfFrame>>& frames,
                                      const GridSpec& grid, const rf::Transducer& td,
                                      const BeamformParams& bp, const DasOptions& opts = {},
                                      DasStats* stats = nullptr);

// Frame assembly from persisted chunk files (1-based IQ_CHUNK_<k>.fqf).
// Errors if a chunk file is missing or inconsistent with the grid partition.
std::vector<IqVolume> assemble_frames(const std::string& work_dir, const ChunkPlan& plan,
                                      const GridSpec& grid, int n_frames);

void write_iq_volume(const std::string& path, const IqVolume& vol);
IqVolume read_iq_volume(const std::string& path);

}  // namespace fqf::beamform
