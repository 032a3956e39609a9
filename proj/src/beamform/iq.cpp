#include "fqf/beamform/iq.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::beamform {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Hamming-windowed sinc, cutoff at f_c, normalized to unit DC gain.
std::vector<double> lowpass_kernel(double f_c, double fs, int taps) {
  int mid = taps / 2;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int k = 0; k < taps; ++k) {
    double x = 2.0 * kPi * (f_c / fs) * (k - mid);
    double s = k == mid ? 1.0 : std::sin(x) / x;
    double w = 0.54 - 0.46 * std::cos(2.0 * kPi * k / (taps - 1));
    h[k] = s * w;
    sum += h[k];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace

IqFrame rf_to_iq(const rf::RfFrame& rfm, double f_c, int lowpass_taps) {
  require(f_c > 0.0, "demodulation frequency must be positive");
  require(rfm.sampling_rate > 2.0 * f_c,
          "sampling rate must exceed twice the demodulation frequency");
  require(lowpass_taps >= 3 && lowpass_taps % 2 == 1,
          "low-pass tap count must be odd and at least 3");
  require(rfm.n_samples >= 1 && rfm.n_elements >= 1, "frame has no samples");
  require(rfm.samples.size() ==
              static_cast<std::size_t>(rfm.n_samples) * static_cast<std::size_t>(rfm.n_elements),
          "frame buffer does not match its declared shape");

  int t_samples = rfm.n_samples;
  int n_elem = rfm.n_elements;
  std::vector<double> h = lowpass_kernel(f_c, rfm.sampling_rate, lowpass_taps);
  int mid = lowpass_taps / 2;

  // Mixer at the absolute sample times, shared across elements.
  std::vector<std::complex<double>> carrier(static_cast<std::size_t>(t_samples));
  for (int t = 0; t < t_samples; ++t) {
    carrier[t] = std::polar(2.0, -2.0 * kPi * f_c * (rfm.t0 + t / rfm.sampling_rate));
  }

  IqFrame out;
  out.n_samples = t_samples;
  out.n_elements = n_elem;
  out.sampling_rate = rfm.sampling_rate;
  out.t0 = rfm.t0;
  out.center_frequency = f_c;
  out.samples.assign(rfm.samples.size(), {0.0, 0.0});

  parallel_for(static_cast<std::size_t>(n_elem), [&](std::size_t e0, std::size_t e1) {
    std::vector<std::complex<double>> mixed(static_cast<std::size_t>(t_samples));
    for (std::size_t e = e0; e < e1; ++e) {
      for (int t = 0; t < t_samples; ++t) {
        mixed[t] = rfm.samples[static_cast<std::size_t>(t) * n_elem + e] * carrier[t];
      }
      // Zero-phase filtering: symmetric kernel centered on the output sample,
      // zero extension past the frame edges.
      for (int t = 0; t < t_samples; ++t) {
        std::complex<double> acc{0.0, 0.0};
        int k_lo = std::max(0, t + mid - (t_samples - 1));
        int k_hi = std::min(lowpass_taps - 1, t + mid);
        for (int k = k_lo; k <= k_hi; ++k) acc += h[k] * mixed[t + mid - k];
        out.samples[static_cast<std::size_t>(t) * n_elem + e] = acc;
      }
    }
  });
  return out;
}

}  // namespace fqf::beamform
