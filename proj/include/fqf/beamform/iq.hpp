#pragma once

#include <complex>
#include <vector>

#include "fqf/rf/simulate.hpp"

namespace fqf::beamform {

// Complex baseband frame.  Layout mirrors RfFrame: time-major,
// samples[t * n_elements + e], which is also the vectorized column order the
// delay matrices index into.
struct IqFrame {
  std::vector<std::complex<double>> samples;
  int n_samples = 0;
  int n_elements = 0;
  double sampling_rate = 0.0;
  double t0 = 0.0;
  double center_frequency = 0.0;

  std::complex<double> at(int t, int e) const {
    return samples[static_cast<std::size_t>(t) * n_elements + e];
  }
};

// Demodulate an RF frame to complex baseband: multiply by 2*exp(-i*2*pi*f_c*t)
// at the absolute sample times t0 + n/fs, then low-pass below f_c with a
// zero-phase Hamming-windowed sinc of `lowpass_taps` coefficients (odd, >= 3;
// DC gain exactly 1).  A unit-amplitude tone at f_c keeps |IQ| within the
// stopband leakage of 1 in steady state.  Requires fs > 2*f_c.
IqFrame rf_to_iq(const rf::RfFrame& rf, double f_c, int lowpass_taps = 33);

}  // namespace fqf::beamform
