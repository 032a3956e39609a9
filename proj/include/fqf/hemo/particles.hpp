#pragma once

#include <string>
#include <vector>

#include "fqf/core/rng.hpp"
#include "fqf/hemo/inlet.hpp"
#include "fqf/hemo/integrate.hpp"

namespace fqf::hemo {

struct ParticleEnsemble {
  int count = 0;
  double frame_interval = 0.0;               // seconds
  std::vector<std::vector<Vec3>> frames;     // frames[f][i], count positions per frame
  std::vector<double> radius;                // optional, empty or count entries
};

// Tracks n particles over round(duration * frame_rate) frames at times
// f / frame_rate.  Initial positions are drawn from the inlet density with
// sub-lattice jitter; a particle that leaves the vessel inside a frame is
// re-injected at a fresh density draw and finishes the frame from there.
// Each particle owns an RNG lane keyed by its index, so results do not
// depend on the worker count.
ParticleEnsemble simulate_particles(const FlowField& field, const InletDensity& density, int n,
                                    double duration, double frame_rate, RngSeed seed,
                                    const IntegrateOptions& opts = {});

void write_particle_frame(const std::string& path, std::span<const Vec3> positions,
                          int frame_index, double time_s);

struct ParticleFrame {
  std::vector<Vec3> positions;
  int frame_index = 0;
  double time_s = 0.0;
};

ParticleFrame read_particle_frame(const std::string& path);

}  // namespace fqf::hemo
