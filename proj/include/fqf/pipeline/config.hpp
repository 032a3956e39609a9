#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fqf/beamform/das.hpp"
#include "fqf/core/error.hpp"
#include "fqf/core/vec.hpp"
#include "fqf/rf/transducer.hpp"
#include "fqf/tissue/cloud.hpp"

namespace fqf::pipeline {

// Configuration problems: unparseable JSON, schema violations, unknown
// presets, inconsistent stage settings.  The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A stage blew up while executing (or its upstream products are missing).
// The CLI maps these to exit code 3.
class StageError : public Error {
 public:
  using Error::Error;
};

struct VesselConfig {
  std::string kind = "tube";  // "tube" | "lsystem"
  Vec3 start{};               // tube
  Vec3 end{};
  double radius = 0.0;
  int iterations = 3;  // lsystem
  double step_length = 2.0e-3;
  double root_diameter = 2.0e-3;
};

struct FlowGrid {
  std::array<int, 3> dims{0, 0, 0};
  Vec3 spacing{1, 1, 1};
  Vec3 origin{0, 0, 0};
};

struct FlowConfig {
  std::string source = "poiseuille";  // "poiseuille" | "file"
  double v_max = 0.0;                 // poiseuille peak, m/s
  FlowGrid grid;                      // sampling grid for the analytic source
  std::string path;                   // imported field, source == "file"
};

struct ParticlesConfig {
  int count = 0;
  int n_frames = 0;
  double frame_rate = 0.0;  // Hz
  double rel_tol = 1e-6;
  int inlet_samples = 1000;
};

struct MotionConfig {
  std::string kind = "none";  // "none" | "constant" | "rotation"
  Vec3 velocity{};            // constant, m/s
  Vec3 center{};              // rotation
  Vec3 axis{0, 0, 1};
  double angular_velocity = 0.0;  // rad/s
};

struct TissueConfig {
  double density_per_lambda2 = 10.0;
  tissue::Box region{};
  double blood_contrast_db = -20.0;
  std::string reflectivity = "gaussian";  // "gaussian" | "uniform"
  MotionConfig motion;
};

struct RfConfig {
  double sound_speed = 1540.0;
  double attenuation_db_cm_mhz = 0.5;
  double sampling_rate = 0.0;
  double duration = 0.0;
  std::vector<double> angles_deg;
  std::size_t memory_budget_bytes = 2'000'000'000;
};

struct BeamformConfig {
  beamform::GridSpec grid;
  double f_number = 1.5;
  int lowpass_taps = 33;
  std::size_t memory_budget_bytes = 100'000'000;
  std::size_t matrix_budget_bytes = 512'000'000;
  bool cache_matrices = true;
};

struct PostConfig {
  int svd_lo = 2;
  int svd_hi = 0;  // 0 resolves to the frame count
  double bmode_dynamic_range_db = 75.0;
  double pd_dynamic_range_db = 60.0;
  double ground_truth_sigma_voxels = 1.0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::string transducer_preset = "l11-4v";
  VesselConfig vessel;
  FlowConfig flow;
  ParticlesConfig particles;
  TissueConfig tissue;
  RfConfig rf;
  BeamformConfig beamform;
  PostConfig post;

  std::string config_dir;  // directory of the config file; resolves relative paths
  // Canonical JSON dump of each section, keyed by section name; feeds the
  // stage content hashes so any config edit invalidates affected stages.
  std::map<std::string, std::string> section_dump;
};

// Parses and schema-checks a run configuration.  Unknown keys, missing
// required fields, and type mismatches throw ConfigError naming the field.
RunConfig load_config(const std::string& path);

// Builds the probe a config names: a registry preset ("l11-4v",
// "matrix32x32") or a path to a transducer JSON file, resolved against the
// config directory.  Throws ConfigError on unknown presets.
rf::Transducer resolve_transducer(const RunConfig& config);

// Loads a transducer description from JSON (see presets/).
rf::Transducer load_transducer_json(const std::string& path);

// Canonical serialization of a resolved transducer; feeds the stage content
// hashes so edits to a transducer file invalidate dependent stages.
std::string transducer_dump(const rf::Transducer& t);

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
};

// Cross-stage consistency checks: Nyquist margin, memory budget sanity,
// grid-versus-aperture field of view, retained SVD band, frame counts.
// Report-only; never throws on findings.
ValidationReport validate_config(const RunConfig& config);

}  // namespace fqf::pipeline
