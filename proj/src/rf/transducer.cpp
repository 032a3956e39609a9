#include "fqf/rf/transducer.hpp"

#include <algorithm>
#include <cmath>

#include "fqf/core/error.hpp"

namespace fqf::rf {

void validate_transducer(const Transducer& t) {
  require(!t.elements.empty(), "transducer has no elements");
  require(t.half_width > 0.0, "element half-width must be positive");
  require(t.subelements >= 1, "sub-element count must be at least 1");
  require(t.pitch > 0.0, "pitch must be positive");
  require(t.center_frequency > 0.0, "center frequency must be positive");
  require(t.fractional_bandwidth > 0.0 && t.fractional_bandwidth < 2.0,
          "fractional bandwidth must lie in (0, 2)");
  if (t.elevation_height > 0.0) {
    require(t.elevation_focus > 0.0, "elevation focus must be positive when a lens is present");
    require(t.elevation_aperture_factor > 0.0, "elevation aperture factor must be positive");
    require(t.elevation_core_weight >= 0.0 && t.elevation_tail_weight >= 0.0,
            "elevation weights must be nonnegative");
  }
}

Transducer l11_4v() {
  Transducer t;
  t.name = "l11-4v";
  t.pitch = 0.3e-3;
  t.half_width = 0.135e-3;
  t.subelements = 4;
  t.center_frequency = 7.7e6;
  t.fractional_bandwidth = 0.67;
  t.elevation_height = 5.0e-3;
  t.elevation_focus = 18.0e-3;
  t.elements.reserve(128);
  for (int n = 0; n < 128; ++n) {
    t.elements.push_back({(n - 63.5) * t.pitch, 0.0, 0.0});
  }
  return t;
}

Transducer matrix32x32() {
  Transducer t;
  t.name = "matrix32x32";
  t.pitch = 0.3e-3;
  t.half_width = 0.135e-3;
  t.subelements = 2;
  t.center_frequency = 3.0e6;
  t.fractional_bandwidth = 0.6;
  t.elevation_height = 0.0;  // 2-D aperture, no fixed lens
  t.elevation_focus = 0.0;
  t.elements.reserve(32 * 32);
  for (int j = 0; j < 32; ++j) {
    for (int i = 0; i < 32; ++i) {
      t.elements.push_back({(i - 15.5) * t.pitch, (j - 15.5) * t.pitch, 0.0});
    }
  }
  return t;
}

TxEvent plane_wave_delays(const Transducer& t, double angle, double c) {
  validate_transducer(t);
  require(c > 0.0, "sound speed must be positive");
  require(std::abs(angle) < 1.5707963267948966, "steering angle must lie in (-pi/2, pi/2)");
  TxEvent ev;
  ev.angle = angle;
  ev.delays.resize(t.elements.size());
  ev.apodization.assign(t.elements.size(), 1.0);
  double slope = std::sin(angle) / c;
  double lo = 0.0;
  for (std::size_t n = 0; n < t.elements.size(); ++n) {
    ev.delays[n] = t.elements[n].x * slope;
    lo = n == 0 ? ev.delays[n] : std::min(lo, ev.delays[n]);
  }
  for (double& d : ev.delays) d -= lo;
  return ev;
}

double directivity(double theta, double k, double b) {
  double x = k * b * std::sin(theta);
  return x == 0.0 ? 1.0 : std::sin(x) / x;
}

}  // namespace fqf::rf
