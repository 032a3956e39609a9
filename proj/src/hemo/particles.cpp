#include "fqf/hemo/particles.hpp"

#include <algorithm>
#include <cmath>

#include "fqf/core/container.hpp"
#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"
#include "fqf/hemo/integrate.hpp"

namespace fqf::hemo {

namespace {

// Advances one particle by dt, re-injecting at the inlet on exit.  Returns
// the end position, always inside (or at worst at) the vessel.
Vec3 advance_particle(const FlowField& field, const InletDensity& density, Vec3 p, double dt,
                      CounterRng& rng, const IntegrateOptions& opts) {
  double remaining = dt;
  for (int attempt = 0; attempt < 8 && remaining > 0.0; ++attempt) {
    if (sample_mask_clamped(field, p) < 0.5) {
      p = sample_inlet_point(density, rng);
      continue;
    }
    Trajectory traj = integrate_trajectory(field, p, remaining, opts);
    if (!traj.exited) return traj.end;
    remaining = std::max(0.0, remaining - traj.exit_time);
    p = sample_inlet_point(density, rng);
  }
  return p;
}

}  // namespace

ParticleEnsemble simulate_particles(const FlowField& field, const InletDensity& density, int n,
                                    double duration, double frame_rate, RngSeed seed,
                                    const IntegrateOptions& opts) {
  require(n > 0, "particle count must be positive");
  require(frame_rate > 0.0, "frame rate must be positive");
  require(duration >= 0.0, "duration must be non-negative");

  int n_frames = std::max(1, static_cast<int>(std::llround(duration * frame_rate)));
  double dt = 1.0 / frame_rate;

  ParticleEnsemble out;
  out.count = n;
  out.frame_interval = dt;
  out.frames.assign(n_frames, std::vector<Vec3>(n));

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      CounterRng rng(seed, "particles", i);
      Vec3 p = sample_inlet_point(density, rng);
      out.frames[0][i] = p;
      for (int f = 1; f < n_frames; ++f) {
        p = advance_particle(field, density, p, dt, rng, opts);
        out.frames[f][i] = p;
      }
    }
  });
  return out;
}

void write_particle_frame(const std::string& path, std::span<const Vec3> positions,
                          int frame_index, double time_s) {
  std::vector<double> flat;
  flat.reserve(positions.size() * 3);
  for (const Vec3& p : positions) {
    flat.push_back(p.x);
    flat.push_back(p.y);
    flat.push_back(p.z);
  }
  ContainerHeader h;
  h.emplace_back("kind", "particles");
  h.emplace_back("frame", std::to_string(frame_index));
  h.emplace_back("time", detail::concat(time_s));
  h.emplace_back("particles", std::to_string(positions.size()));
  write_container(path, h, make_payload(std::span<const double>(flat)));
}

ParticleFrame read_particle_frame(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(find_header(header, "kind") && header_value(header, "kind") == "particles", path,
          ": not a particle container");
  ParticleFrame out;
  out.frame_index = std::stoi(header_value(header, "frame"));
  out.time_s = std::stod(header_value(header, "time"));
  std::vector<double> flat = as_real_f64(payload);
  require(flat.size() % 3 == 0, path, ": particle payload is not 3 doubles per point");
  out.positions.resize(flat.size() / 3);
  for (std::size_t i = 0; i < out.positions.size(); ++i)
    out.positions[i] = {flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]};
  return out;
}

}  // namespace fqf::hemo
