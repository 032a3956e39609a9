#pragma once

#include <string>
#include <vector>

#include "fqf/core/vec.hpp"

namespace fqf::rf {

// Aperture description.  Element centers lie in the z = 0 plane: azimuth is
// x, elevation y, depth z.  Sub-elements tile each element uniformly across
// its azimuth width and share its delay and apodization.
struct Transducer {
  std::string name;
  std::vector<Vec3> elements;          // element centers, m
  double half_width = 0.0;             // element azimuth half-width b, m
  int subelements = 4;                 // v, per element in azimuth
  double pitch = 0.0;                  // m
  double center_frequency = 0.0;       // f_c, Hz
  double fractional_bandwidth = 0.67;  // at -6 dB

  // Fixed-lens elevation beam, modeled as a two-term Gaussian superposition;
  // height <= 0 disables the factor entirely.
  double elevation_height = 0.0;           // lens aperture H, m
  double elevation_focus = 0.0;            // F, m
  double elevation_core_weight = 0.85;     // weight of the focal Gaussian
  double elevation_tail_weight = 0.15;     // weight of the 2x-wide tail term
  double elevation_aperture_factor = 0.494;  // effective waist w_a = factor * H

  int n_elements() const { return static_cast<int>(elements.size()); }
};

void validate_transducer(const Transducer& t);

// 128-element linear probe preset.
Transducer l11_4v();

// 32 x 32 matrix probe preset (electronic elevation, no fixed lens).
Transducer matrix32x32();

// One steered plane-wave transmit.
struct TxEvent {
  double angle = 0.0;               // steering in the x-z plane, rad
  std::vector<double> delays;       // per element, s; earliest is zero
  std::vector<double> apodization;  // per element
};

// Plane-wave transmit law: delays affine in element azimuth with slope
// sin(angle)/c, shifted so the earliest element fires at zero; unit weights.
TxEvent plane_wave_delays(const Transducer& t, double angle, double c);

// Unnormalized element directivity sin(k b sin(theta)) / (k b sin(theta)),
// equal to 1 on axis.
double directivity(double theta, double k, double b);

}  // namespace fqf::rf
