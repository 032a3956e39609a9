#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fqf/core/rng.hpp"
#include "fqf/core/vec.hpp"

namespace fqf::tissue {

enum class Label : std::uint8_t { tissue = 0, blood = 1 };

struct ScattererCloud {
  std::vector<Vec3> positions;
  std::vector<double> reflectivity;
  std::vector<Label> label;

  std::size_t size() const { return positions.size(); }
};

struct Box {
  Vec3 lo;
  Vec3 hi;
  double volume() const {
    Vec3 d = hi - lo;
    return std::max(0.0, d.x) * std::max(0.0, d.y) * std::max(0.0, d.z);
  }
};

enum class ReflectivityLaw { gaussian, uniform };

// Count rule: per_lambda2_density / (15 lambda^3) scatterers per unit
// volume.  The 1/15 calibration reproduces the reference count of 2.5e6
// scatterers in a 4 x 1.5 x 5 cm box at lambda = 200 um for density 10.
std::size_t cloud_count(const Box& region, double wavelength, double per_lambda2_density);

// Uniform positions, i.i.d. unit-variance zero-mean reflectivity, all
// labels tissue.  Throws when the implied count exceeds max_count.
ScattererCloud generate_cloud(const Box& region, double wavelength, double per_lambda2_density,
                              ReflectivityLaw law, RngSeed seed,
                              std::size_t max_count = 50'000'000);

// Scales blood-labeled reflectivities by the given power contrast.
void apply_blood_contrast(ScattererCloud& cloud, double contrast_db = -20.0);

// Single-file snapshot: positions as 3 f32, reflectivity f32, label u8,
// packed in that order inside a u8 payload.
void write_cloud(const std::string& path, const ScattererCloud& cloud);
ScattererCloud read_cloud(const std::string& path);

}  // namespace fqf::tissue
