#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fqf/core/container.hpp"
#include "fqf/rf/transducer.hpp"
#include "fqf/tissue/cloud.hpp"

namespace fqf::rf {

struct MediumParams {
  double c = 1540.0;                   // m/s
  double attenuation_db_cm_mhz = 0.5;  // dB / (cm * MHz), applied per path
  std::size_t scatterer_memory_budget = 2'000'000'000;  // bytes of pair geometry
  double min_fs_ratio = 4.0;           // required sampling_rate / center_frequency
};

// One received frame: real samples, time-major (samples[t * n_elements + e]).
struct RfFrame {
  std::vector<double> samples;
  int n_samples = 0;
  int n_elements = 0;
  double sampling_rate = 0.0;  // Hz
  double t0 = 0.0;             // s, time of the first sample (transmit starts at 0)
  TxEvent tx;

  double& at(int t, int e) {
    return samples[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_elements) + e];
  }
  double at(int t, int e) const {
    return samples[static_cast<std::size_t>(t) * static_cast<std::size_t>(n_elements) + e];
  }
};

struct RfSimStats {
  int blocks = 0;                       // scatterer blocks processed
  int frequencies = 0;                  // bins inside the simulated passband
  std::size_t peak_tracked_bytes = 0;   // high-water mark of tracked buffers
  std::uint64_t pair_bin_products = 0;  // scatterers * sub-elements * bins
};

// Frequency-domain synthesis of the received echoes of a scatterer cloud
// for one plane-wave transmit.  Errors if the pair-geometry working set
// exceeds medium.scatterer_memory_budget; the chunked driver lifts that
// limit by streaming scatterer blocks.
RfFrame simulate_rf(const tissue::ScattererCloud& cloud, const Transducer& t, const TxEvent& tx,
                    const MediumParams& medium, double sampling_rate, double duration,
                    RfSimStats* stats = nullptr);

// Same result, computed over contiguous scatterer blocks sized so each
// block's pair geometry fits the byte budget; block spectra are summed in
// block order before the single inverse transform.
RfFrame simulate_rf_chunked(const tissue::ScattererCloud& cloud, const Transducer& t,
                            const TxEvent& tx, const MediumParams& medium, double sampling_rate,
                            double duration, std::size_t budget, RfSimStats* stats = nullptr);

// How the chunked driver would split a cloud under a byte budget: the
// streamed pair-geometry arrays dominate and scale per scatterer; spectra,
// transform buffers, and worker scratch are fixed overhead reserved first.
struct RfChunkPlan {
  int blocks = 0;
  std::size_t block_scatterers = 0;
  std::size_t per_scatterer_bytes = 0;
  std::size_t fixed_bytes = 0;
};

RfChunkPlan plan_rf_chunks(const Transducer& t, std::size_t n_scatterers,
                           const MediumParams& medium, double sampling_rate, double duration,
                           std::size_t budget);

struct ComposeStats {
  int tissue_simulations = 0;
  int flow_simulations = 0;
};

// Per-frame totals: tissue echoes plus flow echoes.  With static_tissue the
// tissue response is simulated once from tissue_frames[0] and reused.
std::vector<RfFrame> compose_frames(const std::vector<tissue::ScattererCloud>& tissue_frames,
                                    const std::vector<tissue::ScattererCloud>& flow_frames,
                                    bool static_tissue, const Transducer& t, const TxEvent& tx,
                                    const MediumParams& medium, double sampling_rate,
                                    double duration, ComposeStats* stats = nullptr);

// Container io: f32 payload, time-major, with sampling rate, start time,
// transmit angle, and frame index in the header.
void write_rf_frame(const std::string& path, const RfFrame& frame, int frame_index);
std::pair<RfFrame, int> read_rf_frame(const std::string& path);

}  // namespace fqf::rf
