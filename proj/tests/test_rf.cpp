#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fqf/core/error.hpp"
#include "fqf/rf/simulate.hpp"
#include "fqf/rf/transducer.hpp"
#include "fqf/tissue/cloud.hpp"

using namespace fqf;
using namespace fqf::rf;

namespace {

constexpr double kPi = std::numbers::pi;

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "fqf_rf_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Transducer small_probe(int n_elements, int v, double fc, double bw) {
  Transducer t;
  t.name = "test";
  t.pitch = 0.4e-3;
  t.half_width = 0.15e-3;
  t.subelements = v;
  t.center_frequency = fc;
  t.fractional_bandwidth = bw;
  t.elevation_height = 0.0;
  for (int n = 0; n < n_elements; ++n) {
    t.elements.push_back({(n - (n_elements - 1) / 2.0) * t.pitch, 0.0, 0.0});
  }
  return t;
}

// Frozen reference: literal per-frequency synthesis with an explicit
// transmit sum over every sub-element, per-element aggregation of its
// sub-element receive paths, Gaussian pulse weights, and a direct inverse
// transform.  No recurrences, no banding, no chunking: each factor is
// evaluated from scratch with std::polar / std::exp per frequency.
std::vector<double> reference_rf(const tissue::ScattererCloud& cloud, const Transducer& td,
                                 const TxEvent& tx, const MediumParams& med, double fs,
                                 double duration) {
  const int t_len = static_cast<int>(std::llround(fs * duration));
  const double df = fs / t_len;
  const double fc = td.center_frequency;
  const double sigma = 0.5 * td.fractional_bandwidth * fc / std::sqrt(2.0 * std::log(2.0));
  const double span = std::sqrt(4.0 * std::log(10.0)) * sigma;
  const int j_lo = std::max(1, static_cast<int>(std::ceil((fc - span) / df)));
  const int j_hi = std::min((t_len - 1) / 2, static_cast<int>(std::floor((fc + span) / df)));
  const int n_elem = td.n_elements();
  const int v = td.subelements;
  const double beta = med.attenuation_db_cm_mhz * (std::log(10.0) / 20.0) * 1e-4;

  std::vector<Vec3> sub;
  for (const Vec3& e : td.elements) {
    for (int mu = 0; mu < v; ++mu) {
      sub.push_back({e.x + ((mu + 0.5) / v - 0.5) * 2.0 * td.half_width, e.y, e.z});
    }
  }

  auto delta = [&](double y, double r, double k) {
    if (td.elevation_height <= 0.0) return 1.0;
    double wa = td.elevation_aperture_factor * td.elevation_height;
    double near_term = wa * (1.0 - r / td.elevation_focus);
    double far_term = 2.0 * r / (k * wa);
    double w2 = near_term * near_term + far_term * far_term;
    double core = std::exp(-y * y / w2);
    return td.elevation_core_weight * core + td.elevation_tail_weight * std::pow(core, 0.25);
  };
  auto path = [&](const Vec3& p, const Vec3& q, double k, double f) {
    double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
    double r = std::sqrt(dx * dx + dy * dy + dz * dz);
    double x = k * td.half_width * (dx / r);
    double dir = x == 0.0 ? 1.0 : std::sin(x) / x;
    return std::polar(1.0, k * r) / r * dir * delta(p.y, r, k) * std::exp(-beta * f * r);
  };

  std::vector<std::complex<double>> spec(static_cast<std::size_t>(j_hi - j_lo + 1) * n_elem);
  for (int j = j_lo; j <= j_hi; ++j) {
    double f = j * df;
    double k = 2.0 * kPi * f / med.c;
    for (std::size_t s = 0; s < cloud.positions.size(); ++s) {
      const Vec3& p = cloud.positions[s];
      std::complex<double> txsum = 0.0;
      for (int n = 0; n < n_elem * v; ++n) {
        txsum += tx.apodization[n / v] * std::polar(1.0, 2.0 * kPi * f * tx.delays[n / v]) *
                 path(p, sub[n], k, f);
      }
      for (int e = 0; e < n_elem; ++e) {
        std::complex<double> rx = 0.0;
        for (int mu = 0; mu < v; ++mu) rx += path(p, sub[e * v + mu], k, f);
        spec[static_cast<std::size_t>(j - j_lo) * n_elem + e] +=
            cloud.reflectivity[s] * txsum * rx;
      }
    }
  }

  std::vector<double> out(static_cast<std::size_t>(t_len) * n_elem, 0.0);
  for (int e = 0; e < n_elem; ++e) {
    for (int j = j_lo; j <= j_hi; ++j) {
      double f = j * df;
      double d = (f - fc) / sigma;
      double w = std::exp(-0.5 * d * d) / t_len;
      std::complex<double> c_in =
          std::conj(spec[static_cast<std::size_t>(j - j_lo) * n_elem + e]) * w;
      for (int m = 0; m < t_len; ++m) {
        out[static_cast<std::size_t>(m) * n_elem + e] +=
            2.0 * std::real(c_in * std::polar(1.0, 2.0 * kPi * j * m / t_len));
      }
    }
  }
  return out;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double scale = std::max(max_abs(a), max_abs(b));
  REQUIRE(scale > 0.0);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d / scale;
}

// Envelope via the analytic signal: one-sided spectrum of the trace,
// synthesized back with a naive transform.  Raw |rf| extrema ride the
// carrier, which at four samples per period can sit a couple of samples off
// the envelope maximum.
int envelope_peak(const RfFrame& f, int e) {
  int t_len = f.n_samples;
  std::vector<std::complex<double>> spec((t_len - 1) / 2 + 1, 0.0);
  for (int j = 1; j <= (t_len - 1) / 2; ++j) {
    std::complex<double> step = std::polar(1.0, -2.0 * kPi * j / t_len);
    std::complex<double> ph = 1.0;
    std::complex<double> acc = 0.0;
    for (int m = 0; m < t_len; ++m) {
      acc += f.at(m, e) * ph;
      ph *= step;
    }
    spec[j] = acc;
  }
  std::vector<std::complex<double>> analytic(t_len, 0.0);
  for (int j = 1; j <= (t_len - 1) / 2; ++j) {
    std::complex<double> step = std::polar(1.0, 2.0 * kPi * j / t_len);
    std::complex<double> ph = spec[j];
    for (int m = 0; m < t_len; ++m) {
      analytic[m] += ph;
      ph *= step;
    }
  }
  int best = 0;
  double best_v = -1.0;
  for (int m = 0; m < t_len; ++m) {
    double v = std::abs(analytic[m]);
    if (v > best_v) {
      best_v = v;
      best = m;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("plane-wave delays follow the affine law with zero minimum") {
  Transducer td = l11_4v();
  CHECK(td.n_elements() == 128);
  validate_transducer(td);

  TxEvent ev = plane_wave_delays(td, 5.0 * kPi / 180.0, 1540.0);
  double span = *std::max_element(ev.delays.begin(), ev.delays.end()) -
                *std::min_element(ev.delays.begin(), ev.delays.end());
  double expected = 127.0 * 0.3e-3 * std::sin(5.0 * kPi / 180.0) / 1540.0;
  CHECK(span == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(2.157e-6).epsilon(1e-3));
  CHECK(*std::min_element(ev.delays.begin(), ev.delays.end()) == 0.0);
  for (double w : ev.apodization) CHECK(w == 1.0);
  for (std::size_t n = 1; n < ev.delays.size(); ++n) CHECK(ev.delays[n] > ev.delays[n - 1]);

  TxEvent flat = plane_wave_delays(td, 0.0, 1540.0);
  for (double d : flat.delays) CHECK(d == 0.0);

  TxEvent neg = plane_wave_delays(td, -5.0 * kPi / 180.0, 1540.0);
  for (std::size_t n = 0; n < neg.delays.size(); ++n) {
    CHECK(neg.delays[n] == doctest::Approx(ev.delays[ev.delays.size() - 1 - n]).epsilon(1e-12));
  }
}

TEST_CASE("directivity hits the exact sinc landmarks") {
  CHECK(directivity(0.0, 123.0, 1e-4) == 1.0);
  // k b sin(theta) = pi: a null.
  CHECK(std::abs(directivity(kPi / 2.0, kPi, 1.0)) < 1e-15);
  // k b sin(theta) = pi / 2: 2 / pi.
  CHECK(directivity(kPi / 2.0, kPi / 2.0, 1.0) == doctest::Approx(2.0 / kPi).epsilon(1e-15));
}

TEST_CASE("matrix preset is a centered 32 x 32 grid without a lens") {
  Transducer td = matrix32x32();
  validate_transducer(td);
  CHECK(td.n_elements() == 1024);
  CHECK(td.elevation_height <= 0.0);
  double sx = 0.0, sy = 0.0;
  for (const Vec3& e : td.elements) {
    sx += e.x;
    sy += e.y;
  }
  CHECK(std::abs(sx) < 1e-12);
  CHECK(std::abs(sy) < 1e-12);
  CHECK(td.elements[0].x == doctest::Approx(-15.5 * td.pitch));
  CHECK(td.elements[1023].y == doctest::Approx(15.5 * td.pitch));
}

TEST_CASE("simulated rf matches the literal frequency-domain reference") {
  Transducer td = small_probe(3, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 3.0 * kPi / 180.0, 1540.0);
  tx.apodization = {1.0, 0.8, 1.2};
  MediumParams med;
  med.attenuation_db_cm_mhz = 0.7;

  tissue::ScattererCloud cloud;
  cloud.positions = {{1.0e-3, 0.3e-3, 8.0e-3}, {-0.7e-3, 0.0, 11.0e-3}, {0.2e-3, -0.2e-3, 9.5e-3}};
  cloud.reflectivity = {1.0, -0.7, 0.35};
  double fs = 20e6, duration = 20e-6;

  RfSimStats stats;
  RfFrame frame = simulate_rf(cloud, td, tx, med, fs, duration, &stats);
  std::vector<double> ref = reference_rf(cloud, td, tx, med, fs, duration);

  CHECK(frame.n_samples == 400);
  CHECK(frame.n_elements == 3);
  CHECK(frame.t0 == 0.0);
  CHECK(max_rel_diff(frame.samples, ref) < 1e-12);

  // Passband bookkeeping agrees with an independent count.
  double sigma = 0.5 * td.fractional_bandwidth * td.center_frequency / std::sqrt(2.0 * std::log(2.0));
  double span = std::sqrt(4.0 * std::log(10.0)) * sigma;
  double df = fs / frame.n_samples;
  int j_lo = std::max(1, static_cast<int>(std::ceil((td.center_frequency - span) / df)));
  int j_hi = std::min((frame.n_samples - 1) / 2,
                      static_cast<int>(std::floor((td.center_frequency + span) / df)));
  CHECK(stats.frequencies == j_hi - j_lo + 1);
  CHECK(stats.blocks == 1);
  CHECK(stats.pair_bin_products ==
        static_cast<std::uint64_t>(cloud.positions.size()) * 6 * stats.frequencies);
}

TEST_CASE("elevation factor matches the reference within the band interpolation error") {
  Transducer td = small_probe(3, 2, 5e6, 0.5);
  td.elevation_height = 4.0e-3;
  td.elevation_focus = 12.0e-3;
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;

  tissue::ScattererCloud cloud;
  cloud.positions = {{1.0e-3, 0.5e-3, 8.0e-3}, {-0.7e-3, -0.8e-3, 11.0e-3}, {0.2e-3, 0.0, 9.5e-3}};
  cloud.reflectivity = {1.0, -0.7, 0.35};

  RfFrame frame = simulate_rf(cloud, td, tx, med, 20e6, 20e-6);
  std::vector<double> ref = reference_rf(cloud, td, tx, med, 20e6, 20e-6);
  // The engine interpolates the elevation factor linearly between exact
  // knots eight bins apart; everything else is exact, so the residual
  // bounds that interpolation error.
  CHECK(max_rel_diff(frame.samples, ref) < 2e-3);

  // An off-plane scatterer is strictly weaker than the same scatterer in
  // plane once the lens is active.
  tissue::ScattererCloud on, off;
  on.positions = {{0.0, 0.0, 12.0e-3}};
  on.reflectivity = {1.0};
  off.positions = {{0.0, 1.5e-3, 12.0e-3}};
  off.reflectivity = {1.0};
  RfFrame f_on = simulate_rf(on, td, tx, med, 20e6, 20e-6);
  RfFrame f_off = simulate_rf(off, td, tx, med, 20e6, 20e-6);
  CHECK(max_abs(f_off.samples) < 0.5 * max_abs(f_on.samples));
}

TEST_CASE("envelope peak sits at the two-way travel time for 50 depths") {
  Transducer td = small_probe(9, 2, 5e6, 0.6);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  double fs = 20e6, duration = 60e-6;

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> depth(5e-3, 35e-3);
  for (int trial = 0; trial < 50; ++trial) {
    double z = depth(rng);
    tissue::ScattererCloud cloud;
    cloud.positions = {{0.0, 0.0, z}};
    cloud.reflectivity = {1.0};
    RfFrame frame = simulate_rf(cloud, td, tx, med, fs, duration);
    double expected = 2.0 * z / med.c * fs;
    CHECK(std::abs(envelope_peak(frame, 4) - expected) <= 1.0);
  }
}

TEST_CASE("doubling reflectivity doubles every sample exactly") {
  Transducer td = small_probe(5, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 2.0 * kPi / 180.0, 1540.0);
  MediumParams med;

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ux(-2e-3, 2e-3), uz(6e-3, 14e-3);
  std::normal_distribution<double> refl(0.0, 1.0);
  tissue::ScattererCloud cloud;
  for (int i = 0; i < 20; ++i) {
    cloud.positions.push_back({ux(rng), 0.0, uz(rng)});
    cloud.reflectivity.push_back(refl(rng));
  }
  tissue::ScattererCloud doubled = cloud;
  for (double& r : doubled.reflectivity) r *= 2.0;

  RfFrame base = simulate_rf(cloud, td, tx, med, 20e6, 25e-6);
  RfFrame twice = simulate_rf(doubled, td, tx, med, 20e6, 25e-6);
  for (std::size_t i = 0; i < base.samples.size(); ++i) {
    CHECK(twice.samples[i] == 2.0 * base.samples[i]);
  }

  // Additivity across disjoint sub-clouds.
  tissue::ScattererCloud a, b;
  for (int i = 0; i < 20; ++i) {
    auto& dst = i < 10 ? a : b;
    dst.positions.push_back(cloud.positions[i]);
    dst.reflectivity.push_back(cloud.reflectivity[i]);
  }
  RfFrame fa = simulate_rf(a, td, tx, med, 20e6, 25e-6);
  RfFrame fb = simulate_rf(b, td, tx, med, 20e6, 25e-6);
  std::vector<double> sum(fa.samples.size());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = fa.samples[i] + fb.samples[i];
  CHECK(max_rel_diff(base.samples, sum) < 1e-9);
}

TEST_CASE("block partitioning leaves the frame unchanged") {
  Transducer td = small_probe(5, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  double fs = 20e6, duration = 25e-6;

  std::mt19937 rng(13);
  std::uniform_real_distribution<double> ux(-2e-3, 2e-3), uz(6e-3, 14e-3);
  std::normal_distribution<double> refl(0.0, 1.0);
  tissue::ScattererCloud cloud;
  for (int i = 0; i < 1000; ++i) {
    cloud.positions.push_back({ux(rng), 0.0, uz(rng)});
    cloud.reflectivity.push_back(refl(rng));
  }

  RfSimStats base_stats;
  RfFrame base = simulate_rf(cloud, td, tx, med, fs, duration, &base_stats);
  CHECK(base_stats.blocks == 1);

  RfChunkPlan probe = plan_rf_chunks(td, cloud.size(), med, fs, duration, SIZE_MAX);
  for (int target : {1, 2, 4, 8}) {
    std::size_t block = (cloud.size() + target - 1) / target;
    std::size_t budget = probe.fixed_bytes + block * probe.per_scatterer_bytes;
    RfChunkPlan plan = plan_rf_chunks(td, cloud.size(), med, fs, duration, budget);
    CHECK(plan.blocks == target);

    RfSimStats stats;
    RfFrame chunked = simulate_rf_chunked(cloud, td, tx, med, fs, duration, budget, &stats);
    CHECK(stats.blocks == target);
    if (target == 1) {
      for (std::size_t i = 0; i < base.samples.size(); ++i) {
        CHECK(chunked.samples[i] == base.samples[i]);
      }
    } else {
      CHECK(max_rel_diff(base.samples, chunked.samples) < 1e-7);
    }
  }
}

TEST_CASE("mirrored geometry mirrors the arrival time") {
  Transducer td = small_probe(8, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;

  tissue::ScattererCloud right, left;
  right.positions = {{0.9e-3, 0.0, 10e-3}};
  right.reflectivity = {1.0};
  left.positions = {{-0.9e-3, 0.0, 10e-3}};
  left.reflectivity = {1.0};

  RfFrame fr = simulate_rf(right, td, tx, med, 20e6, 25e-6);
  RfFrame fl = simulate_rf(left, td, tx, med, 20e6, 25e-6);
  for (int e : {1, 2, 6}) {
    CHECK(std::abs(envelope_peak(fr, e) - envelope_peak(fl, 7 - e)) <= 1);
  }
}

TEST_CASE("budget too small for one pass reports the chunked driver") {
  Transducer td = small_probe(5, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  med.scatterer_memory_budget = 200'000;

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ux(-2e-3, 2e-3), uz(6e-3, 14e-3);
  tissue::ScattererCloud cloud;
  for (int i = 0; i < 5000; ++i) {
    cloud.positions.push_back({ux(rng), 0.0, uz(rng)});
    cloud.reflectivity.push_back(1.0);
  }
  bool threw = false;
  try {
    simulate_rf(cloud, td, tx, med, 20e6, 25e-6);
  } catch (const Error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("chunked") != std::string::npos);
  }
  CHECK(threw);
  CHECK_THROWS_AS(plan_rf_chunks(td, cloud.size(), med, 20e6, 25e-6, 100), Error);

  // The same cloud passes through the chunked driver under the same budget.
  RfSimStats stats;
  RfFrame f =
      simulate_rf_chunked(cloud, td, tx, med, 20e6, 25e-6, med.scatterer_memory_budget, &stats);
  CHECK(stats.blocks > 1);
  CHECK(stats.peak_tracked_bytes <= med.scatterer_memory_budget);
  CHECK(max_abs(f.samples) > 0.0);
}

TEST_CASE("a million scatterers stream under a 2 GB budget") {
  Transducer td;
  td.name = "wide";
  td.pitch = 0.3e-3;
  td.half_width = 0.135e-3;
  td.subelements = 2;
  td.center_frequency = 3e6;
  td.fractional_bandwidth = 0.4;
  for (int n = 0; n < 32; ++n) td.elements.push_back({(n - 15.5) * td.pitch, 0.0, 0.0});
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  double fs = 12e6, duration = 20e-6;

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ux(-4e-3, 4e-3), uz(10e-3, 12e-3), ur(-1.0, 1.0);
  tissue::ScattererCloud cloud;
  std::size_t n = 1'000'000;
  cloud.positions.reserve(n);
  cloud.reflectivity.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions.push_back({ux(rng), 0.0, uz(rng)});
    cloud.reflectivity.push_back(ur(rng));
  }

  std::size_t budget = 2'000'000'000;
  RfChunkPlan plan = plan_rf_chunks(td, n, med, fs, duration, budget);
  CHECK(plan.blocks >= 2);

  RfSimStats stats;
  RfFrame frame = simulate_rf_chunked(cloud, td, tx, med, fs, duration, budget, &stats);
  CHECK(stats.blocks == plan.blocks);
  CHECK(stats.peak_tracked_bytes <= budget);
  CHECK(stats.pair_bin_products ==
        static_cast<std::uint64_t>(n) * 64 * static_cast<std::uint64_t>(stats.frequencies));
  CHECK(max_abs(frame.samples) > 0.0);
}

TEST_CASE("composition reuses static tissue and adds exactly") {
  Transducer td = small_probe(4, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  double fs = 20e6, duration = 25e-6;

  std::mt19937 rng(29);
  std::uniform_real_distribution<double> ux(-1.5e-3, 1.5e-3), uz(6e-3, 14e-3);
  std::normal_distribution<double> refl(0.0, 1.0);
  tissue::ScattererCloud tissue_cloud;
  for (int i = 0; i < 30; ++i) {
    tissue_cloud.positions.push_back({ux(rng), 0.0, uz(rng)});
    tissue_cloud.reflectivity.push_back(refl(rng));
  }
  std::vector<tissue::ScattererCloud> flow_frames(5);
  for (int f = 0; f < 5; ++f) {
    for (int i = 0; i < 10; ++i) {
      flow_frames[f].positions.push_back({ux(rng), 0.0, uz(rng)});
      flow_frames[f].reflectivity.push_back(refl(rng));
    }
  }

  ComposeStats stats;
  std::vector<RfFrame> totals = compose_frames({tissue_cloud}, flow_frames, true, td, tx, med, fs,
                                               duration, &stats);
  CHECK(stats.tissue_simulations == 1);
  CHECK(stats.flow_simulations == 5);
  CHECK(totals.size() == 5);

  RfFrame tissue_rf = simulate_rf(tissue_cloud, td, tx, med, fs, duration);
  for (int f = 0; f < 5; ++f) {
    RfFrame flow_rf = simulate_rf(flow_frames[f], td, tx, med, fs, duration);
    for (std::size_t i = 0; i < totals[f].samples.size(); ++i) {
      CHECK(totals[f].samples[i] == tissue_rf.samples[i] + flow_rf.samples[i]);
    }
  }

  // Joint simulation of the merged cloud agrees with the composition.
  for (int f = 0; f < 5; ++f) {
    tissue::ScattererCloud merged = tissue_cloud;
    merged.positions.insert(merged.positions.end(), flow_frames[f].positions.begin(),
                            flow_frames[f].positions.end());
    merged.reflectivity.insert(merged.reflectivity.end(), flow_frames[f].reflectivity.begin(),
                               flow_frames[f].reflectivity.end());
    RfFrame joint = simulate_rf(merged, td, tx, med, fs, duration);
    CHECK(max_rel_diff(joint.samples, totals[f].samples) < 1e-7);
  }

  // Re-simulating identical tissue per frame changes the count, not the data.
  std::vector<tissue::ScattererCloud> tissue_frames(5, tissue_cloud);
  ComposeStats stats2;
  std::vector<RfFrame> totals2 = compose_frames(tissue_frames, flow_frames, false, td, tx, med,
                                                fs, duration, &stats2);
  CHECK(stats2.tissue_simulations == 5);
  for (int f = 0; f < 5; ++f) {
    for (std::size_t i = 0; i < totals[f].samples.size(); ++i) {
      CHECK(totals2[f].samples[i] == totals[f].samples[i]);
    }
  }
}

TEST_CASE("rf frame io round-trips through the container") {
  Transducer td = small_probe(3, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 4.0 * kPi / 180.0, 1540.0);
  MediumParams med;
  tissue::ScattererCloud cloud;
  cloud.positions = {{0.0, 0.0, 9e-3}};
  cloud.reflectivity = {1.0};
  RfFrame frame = simulate_rf(cloud, td, tx, med, 20e6, 20e-6);

  auto path = temp_file("frame.fqf");
  write_rf_frame(path.string(), frame, 7);
  auto [back, index] = read_rf_frame(path.string());
  CHECK(index == 7);
  CHECK(back.n_samples == frame.n_samples);
  CHECK(back.n_elements == frame.n_elements);
  CHECK(back.sampling_rate == frame.sampling_rate);
  CHECK(back.t0 == frame.t0);
  CHECK(back.tx.angle == frame.tx.angle);
  for (std::size_t i = 0; i < frame.samples.size(); ++i) {
    CHECK(back.samples[i] == static_cast<double>(static_cast<float>(frame.samples[i])));
  }
}

TEST_CASE("input contract violations throw") {
  Transducer td = small_probe(3, 2, 5e6, 0.5);
  TxEvent tx = plane_wave_delays(td, 0.0, 1540.0);
  MediumParams med;
  tissue::ScattererCloud cloud;
  cloud.positions = {{0.0, 0.0, 9e-3}};
  cloud.reflectivity = {1.0};

  // Sampling below the required multiple of the center frequency.
  CHECK_THROWS_AS(simulate_rf(cloud, td, tx, med, 19e6, 20e-6), Error);
  MediumParams relaxed = med;
  relaxed.min_fs_ratio = 2.0;
  CHECK_NOTHROW(simulate_rf(cloud, td, tx, relaxed, 19e6, 20e-6));

  // Duration shorter than the two-way travel time.
  tissue::ScattererCloud deep;
  deep.positions = {{0.0, 0.0, 20e-3}};
  deep.reflectivity = {1.0};
  CHECK_THROWS_AS(simulate_rf(deep, td, tx, med, 20e6, 20e-6), Error);

  // Non-finite inputs.
  tissue::ScattererCloud bad = cloud;
  bad.positions[0].z = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(simulate_rf(bad, td, tx, med, 20e6, 20e-6), Error);
  bad = cloud;
  bad.reflectivity[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(simulate_rf(bad, td, tx, med, 20e6, 20e-6), Error);

  // Empty cloud.
  tissue::ScattererCloud empty;
  CHECK_THROWS_AS(simulate_rf(empty, td, tx, med, 20e6, 20e-6), Error);

  // Mismatched transmit event.
  TxEvent short_tx = tx;
  short_tx.delays.pop_back();
  CHECK_THROWS_AS(simulate_rf(cloud, td, short_tx, med, 20e6, 20e-6), Error);
}
