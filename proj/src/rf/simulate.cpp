#include "fqf/rf/simulate.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::rf {

namespace {

// Frequency bins are walked in bands of this many samples.  Phase factors
// advance by complex recurrences inside a band and are re-seeded exactly at
// every band start, so recurrence drift is bounded by the band length.
constexpr int kBandBins = 64;

// The elevation factor is evaluated exactly at knots this many bins apart
// and interpolated linearly between them; its curvature in k is too strong
// for band-width interpolation near the low band edge.
constexpr int kDeltaKnotBins = 8;

// Guards for 1/r and 1/(k b sin(theta)) when a scatterer sits on an element
// axis; sin(x)/x evaluates to 1 exactly at these scales.
constexpr double kMinRange = 1e-6;
constexpr double kMinSincArg = 1e-12;

constexpr double kPi = 3.14159265358979323846;

struct Passband {
  int t_samples = 0;  // inverse-transform length
  int j_lo = 0;       // first simulated bin
  int j_hi = 0;       // last simulated bin, below Nyquist
  double df = 0.0;    // bin spacing, Hz

  int bins() const { return j_hi - j_lo + 1; }
};

double pulse_sigma(const Transducer& t) {
  // Gaussian magnitude spectrum whose -6 dB width matches the fractional
  // bandwidth: |P| = 0.5 at f_c +- bw * f_c / 2.
  return 0.5 * t.fractional_bandwidth * t.center_frequency / std::sqrt(2.0 * std::log(2.0));
}

Passband make_passband(const Transducer& t, const MediumParams& medium, double sampling_rate,
                       double duration) {
  require(sampling_rate > 0.0 && duration > 0.0, "sampling rate and duration must be positive");
  require(sampling_rate >= medium.min_fs_ratio * t.center_frequency,
          "sampling rate below the required multiple of the center frequency");
  Passband pb;
  pb.t_samples = static_cast<int>(std::llround(sampling_rate * duration));
  require(pb.t_samples >= 16, "duration too short for the sampling rate");
  pb.df = sampling_rate / pb.t_samples;
  double sigma = pulse_sigma(t);
  // Bins where the pulse magnitude is 40 dB or more below peak are skipped.
  double span = std::sqrt(4.0 * std::log(10.0)) * sigma;
  int max_bin = (pb.t_samples - 1) / 2;
  pb.j_lo = std::max(1, static_cast<int>(std::ceil((t.center_frequency - span) / pb.df)));
  pb.j_hi = std::min(max_bin, static_cast<int>(std::floor((t.center_frequency + span) / pb.df)));
  require(pb.j_lo <= pb.j_hi, "no frequency bins fall inside the pulse passband");
  return pb;
}

// High-water accounting of the engine's bulk buffers.
struct Tracker {
  std::size_t current = 0;
  std::size_t peak = 0;

  void add(std::size_t n) {
    current += n;
    peak = std::max(peak, current);
  }
  void sub(std::size_t n) { current -= n; }
};

struct SubApertures {
  std::vector<double> x, y, z;  // sub-element centers, vN entries, v per element
};

SubApertures tile_subelements(const Transducer& t) {
  SubApertures s;
  int v = t.subelements;
  std::size_t vn = t.elements.size() * static_cast<std::size_t>(v);
  s.x.reserve(vn);
  s.y.reserve(vn);
  s.z.reserve(vn);
  for (const Vec3& e : t.elements) {
    for (int mu = 0; mu < v; ++mu) {
      // Uniform tiling across the element azimuth width 2b.
      double off = ((mu + 0.5) / v - 0.5) * 2.0 * t.half_width;
      s.x.push_back(e.x + off);
      s.y.push_back(e.y);
      s.z.push_back(e.z);
    }
  }
  return s;
}

// Per-pair geometry, laid out as parallel arrays indexed by
// (scatterer - block_start) * vN + sub_element.  These are the streamed
// block buffers the memory budget governs.
struct BlockGeometry {
  std::vector<double> r, inv_r;            // range and 1/range
  std::vector<double> step_re, step_im;    // e^{i dk r}
  std::vector<double> g, inv_g;            // b sin(theta) clamped, and inverse
  std::vector<double> sstep_re, sstep_im;  // e^{i dk g}
  std::vector<double> aratio;              // per-bin attenuation ratio e^{-beta df r}
  std::vector<double> el1, el2;            // elevation beam width terms
  std::vector<double> ysq;                 // per scatterer: squared elevation offset
  std::vector<double> refl;                // per scatterer reflectivity

  std::size_t bytes() const {
    return (r.capacity() + inv_r.capacity() + step_re.capacity() + step_im.capacity() +
            g.capacity() + inv_g.capacity() + sstep_re.capacity() + sstep_im.capacity() +
            aratio.capacity() + el1.capacity() + el2.capacity() + ysq.capacity() +
            refl.capacity()) *
           sizeof(double);
  }

  void resize(std::size_t scatterers, std::size_t vn) {
    std::size_t pairs = scatterers * vn;
    for (auto* a : {&r, &inv_r, &step_re, &step_im, &g, &inv_g, &sstep_re, &sstep_im, &aratio,
                    &el1, &el2}) {
      a->resize(pairs);
    }
    ysq.resize(scatterers);
    refl.resize(scatterers);
  }
};

struct EngineConfig {
  double beta = 0.0;       // attenuation, nepers / (Hz m)
  double dk = 0.0;         // wavenumber step per bin, 2 pi df / c
  double wa = 0.0;         // elevation waist, m
  double inv_focus = 0.0;  // 1 / elevation focus
  bool elevation = false;
  double core_w = 0.0, tail_w = 0.0;
};

double elevation_factor(double ysq, double e1, double e2, double k, const EngineConfig& cfg) {
  double w2 = e1 + e2 / (k * k);
  double core = std::exp(-ysq / w2);
  return cfg.core_w * core + cfg.tail_w * std::sqrt(std::sqrt(core));
}

void precompute_block(const tissue::ScattererCloud& cloud, std::size_t s0, std::size_t s1,
                      const SubApertures& sub, const EngineConfig& cfg, double half_width,
                      BlockGeometry& geo) {
  std::size_t vn = sub.x.size();
  parallel_for(s1 - s0, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ls = lo; ls < hi; ++ls) {
      const Vec3 p = cloud.positions[s0 + ls];
      geo.ysq[ls] = p.y * p.y;
      geo.refl[ls] = cloud.reflectivity[s0 + ls];
      std::size_t base = ls * vn;
      for (std::size_t i = 0; i < vn; ++i) {
        double dx = p.x - sub.x[i];
        double dy = p.y - sub.y[i];
        double dz = p.z - sub.z[i];
        double r = std::sqrt(dx * dx + dy * dy + dz * dz);
        r = std::max(r, kMinRange);
        double inv_r = 1.0 / r;
        geo.r[base + i] = r;
        geo.inv_r[base + i] = inv_r;
        double ph = cfg.dk * r;
        geo.step_re[base + i] = std::cos(ph);
        geo.step_im[base + i] = std::sin(ph);
        double g = std::max(std::abs(half_width * dx * inv_r), kMinSincArg);
        geo.g[base + i] = g;
        geo.inv_g[base + i] = 1.0 / g;
        double sp = cfg.dk * g;
        geo.sstep_re[base + i] = std::cos(sp);
        geo.sstep_im[base + i] = std::sin(sp);
        geo.aratio[base + i] = std::exp(-cfg.beta * r);  // beta carries the df factor here
        if (cfg.elevation) {
          double a = cfg.wa * (1.0 - r * cfg.inv_focus);
          geo.el1[base + i] = a * a;
          double b2 = 2.0 * r / cfg.wa;
          geo.el2[base + i] = b2 * b2;
        }
      }
    }
  });
}

// Scratch reused across the scatterers of one band task.
struct BandScratch {
  std::vector<double> ph_re, ph_im;    // receive phasor e^{i k r}
  std::vector<double> sp_re, sp_im;    // sinc phasor e^{i k g}
  std::vector<double> att;             // attenuation e^{-beta f r}
  std::vector<double> d0, d1, dd;      // elevation knot values and per-bin slope
  std::vector<double> ctr_re, ctr_im;  // per-pair contribution at the current bin
  std::vector<double> inv_k;           // 1 / k_j inside the band
  std::vector<double> dph;             // transmit delay phasors, [bin][element][2]
  std::vector<double> racc;            // per-element receive sums, [element][2]

  void resize(std::size_t vn, int nb, int n_elem) {
    for (auto* a : {&ph_re, &ph_im, &sp_re, &sp_im, &att, &d0, &d1, &dd, &ctr_re, &ctr_im}) {
      a->resize(vn);
    }
    inv_k.resize(nb);
    dph.resize(static_cast<std::size_t>(nb) * n_elem * 2);
    racc.resize(static_cast<std::size_t>(n_elem) * 2);
  }
};

std::size_t scratch_bytes(std::size_t vn, int nb, int n_elem) {
  return (10 * vn + static_cast<std::size_t>(nb) +
          static_cast<std::size_t>(nb) * n_elem * 2 + static_cast<std::size_t>(n_elem) * 2) *
         sizeof(double);
}

// One frequency band of one block: every scatterer's contribution to the
// band's spectrum slice, scatterers in cloud order.
void accumulate_band(const BlockGeometry& geo, std::size_t n_scatterers, std::size_t vn, int v,
                     const TxEvent& tx, const EngineConfig& cfg, const Passband& pb, int jb0,
                     int nb, double c, BandScratch& sc, double* spec) {
  int n_elem = static_cast<int>(tx.delays.size());
  sc.resize(vn, nb, n_elem);
  double f0 = jb0 * pb.df;
  double k0 = 2.0 * kPi * f0 / c;
  for (int jj = 0; jj < nb; ++jj) {
    sc.inv_k[jj] = c / (2.0 * kPi * (jb0 + jj) * pb.df);
  }
  // Transmit delay phasors e^{i omega tau_e}, advanced across the band once
  // and shared by every scatterer.
  for (int e = 0; e < n_elem; ++e) {
    double a0 = 2.0 * kPi * f0 * tx.delays[e];
    double da = 2.0 * kPi * pb.df * tx.delays[e];
    double cr = std::cos(a0), ci = std::sin(a0);
    double sr = std::cos(da), si = std::sin(da);
    for (int jj = 0; jj < nb; ++jj) {
      sc.dph[(static_cast<std::size_t>(jj) * n_elem + e) * 2] = cr;
      sc.dph[(static_cast<std::size_t>(jj) * n_elem + e) * 2 + 1] = ci;
      double nr = cr * sr - ci * si;
      ci = cr * si + ci * sr;
      cr = nr;
    }
  }

  for (std::size_t s = 0; s < n_scatterers; ++s) {
    std::size_t base = s * vn;
    const double* r = geo.r.data() + base;
    const double* inv_r = geo.inv_r.data() + base;
    const double* step_re = geo.step_re.data() + base;
    const double* step_im = geo.step_im.data() + base;
    const double* g = geo.g.data() + base;
    const double* inv_g = geo.inv_g.data() + base;
    const double* sstep_re = geo.sstep_re.data() + base;
    const double* sstep_im = geo.sstep_im.data() + base;
    const double* aratio = geo.aratio.data() + base;
    double rs = geo.refl[s];
    double ysq = geo.ysq[s];

    // Exact seeds at the band start.
    double att_k = cfg.beta * f0 / pb.df;  // beta absorbed df; rescale to f0
    for (std::size_t i = 0; i < vn; ++i) {
      double ph = k0 * r[i];
      sc.ph_re[i] = std::cos(ph);
      sc.ph_im[i] = std::sin(ph);
      double sp = k0 * g[i];
      sc.sp_re[i] = std::cos(sp);
      sc.sp_im[i] = std::sin(sp);
      sc.att[i] = std::exp(-att_k * r[i]);
    }
    if (!cfg.elevation) {
      std::fill(sc.d0.begin(), sc.d0.end(), 1.0);
      std::fill(sc.dd.begin(), sc.dd.end(), 0.0);
    }

    for (int sb0 = 0; sb0 < nb; sb0 += kDeltaKnotBins) {
      int sb1 = std::min(nb, sb0 + kDeltaKnotBins);
      if (cfg.elevation) {
        // Knot at this segment's start (carried over from the previous
        // segment's end) and at the next segment start or the final bin.
        int hi = sb1 < nb ? sb1 : nb - 1;
        double k_a = 2.0 * kPi * (jb0 + sb0) * pb.df / c;
        double k_b = 2.0 * kPi * (jb0 + hi) * pb.df / c;
        double inv_den = hi > sb0 ? 1.0 / (hi - sb0) : 0.0;
        for (std::size_t i = 0; i < vn; ++i) {
          double a = sb0 == 0
                         ? elevation_factor(ysq, geo.el1[base + i], geo.el2[base + i], k_a, cfg)
                         : sc.d1[i];
          double b = elevation_factor(ysq, geo.el1[base + i], geo.el2[base + i], k_b, cfg);
          sc.d0[i] = a;
          sc.d1[i] = b;
          sc.dd[i] = (b - a) * inv_den;
        }
      }
      for (int jj = sb0; jj < sb1; ++jj) {
        double invk = sc.inv_k[jj];
        int dj = jj - sb0;
        double* ph_re = sc.ph_re.data();
        double* ph_im = sc.ph_im.data();
        double* sp_re = sc.sp_re.data();
        double* sp_im = sc.sp_im.data();
        double* att = sc.att.data();
        double* ctr_re = sc.ctr_re.data();
        double* ctr_im = sc.ctr_im.data();
        for (std::size_t i = 0; i < vn; ++i) {
          double dir = sp_im[i] * inv_g[i] * invk;  // sin(k g) / (k g)
          double amp = inv_r[i] * att[i] * (sc.d0[i] + sc.dd[i] * dj) * dir;
          ctr_re[i] = amp * ph_re[i];
          ctr_im[i] = amp * ph_im[i];
          double nr = ph_re[i] * step_re[i] - ph_im[i] * step_im[i];
          ph_im[i] = ph_re[i] * step_im[i] + ph_im[i] * step_re[i];
          ph_re[i] = nr;
          double ns = sp_re[i] * sstep_re[i] - sp_im[i] * sstep_im[i];
          sp_im[i] = sp_re[i] * sstep_im[i] + sp_im[i] * sstep_re[i];
          sp_re[i] = ns;
          att[i] *= aratio[i];
        }
        // Element receive sums (sub-element aggregation) and the transmit
        // sum, regrouped by element: sub-elements share their element's
        // delay and weight, so the transmit sum reuses the per-element
        // receive sums.
        const double* dph = sc.dph.data() + static_cast<std::size_t>(jj) * n_elem * 2;
        double tx_re = 0.0, tx_im = 0.0;
        for (int e = 0; e < n_elem; ++e) {
          double rr = 0.0, ri = 0.0;
          std::size_t pb0 = static_cast<std::size_t>(e) * v;
          for (int mu = 0; mu < v; ++mu) {
            rr += ctr_re[pb0 + mu];
            ri += ctr_im[pb0 + mu];
          }
          sc.racc[2 * e] = rr;
          sc.racc[2 * e + 1] = ri;
          double w = tx.apodization[e];
          tx_re += w * (dph[2 * e] * rr - dph[2 * e + 1] * ri);
          tx_im += w * (dph[2 * e] * ri + dph[2 * e + 1] * rr);
        }
        double cr = rs * tx_re;
        double ci = rs * tx_im;
        double* out = spec + static_cast<std::size_t>(jb0 - pb.j_lo + jj) * n_elem * 2;
        for (int e = 0; e < n_elem; ++e) {
          out[2 * e] += cr * sc.racc[2 * e] - ci * sc.racc[2 * e + 1];
          out[2 * e + 1] += cr * sc.racc[2 * e + 1] + ci * sc.racc[2 * e];
        }
      }
    }
  }
}

void check_inputs(const tissue::ScattererCloud& cloud, const Transducer& t, const TxEvent& tx,
                  const MediumParams& medium, double duration) {
  validate_transducer(t);
  require(!cloud.positions.empty(), "scatterer cloud is empty");
  require(cloud.reflectivity.size() == cloud.positions.size(),
          "cloud reflectivity count does not match positions");
  require(tx.delays.size() == t.elements.size(), "transmit delays do not match element count");
  require(tx.apodization.size() == t.elements.size(),
          "transmit apodization does not match element count");
  require(medium.c > 0.0, "sound speed must be positive");
  require(medium.attenuation_db_cm_mhz >= 0.0, "attenuation must be nonnegative");
  double tau_max = 0.0;
  for (double d : tx.delays) {
    require(std::isfinite(d) && d >= 0.0, "transmit delays must be finite and nonnegative");
    tau_max = std::max(tau_max, d);
  }
  // Far aperture corners bound the element-to-scatterer range from above.
  double xmin = t.elements[0].x, xmax = xmin, ymin = t.elements[0].y, ymax = ymin;
  for (const Vec3& e : t.elements) {
    xmin = std::min(xmin, e.x);
    xmax = std::max(xmax, e.x);
    ymin = std::min(ymin, e.y);
    ymax = std::max(ymax, e.y);
  }
  xmin -= t.half_width;
  xmax += t.half_width;
  double t_need = 0.0;
  for (const Vec3& p : cloud.positions) {
    require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z),
            "scatterer positions must be finite");
    double dx = std::max(std::abs(p.x - xmin), std::abs(p.x - xmax));
    double dy = std::max(std::abs(p.y - ymin), std::abs(p.y - ymax));
    double r_far = std::sqrt(dx * dx + dy * dy + p.z * p.z);
    t_need = std::max(t_need, tau_max + 2.0 * r_far / medium.c);
  }
  for (double v : cloud.reflectivity) {
    require(std::isfinite(v), "scatterer reflectivities must be finite");
  }
  require(duration >= t_need, "duration shorter than the maximum two-way travel time");
}

RfChunkPlan plan_layout(const Transducer& t, std::size_t n_scatterers,
                        const MediumParams& medium, double sampling_rate, double duration,
                        std::size_t budget) {
  require(n_scatterers > 0, "scatterer cloud is empty");
  Passband pb = make_passband(t, medium, sampling_rate, duration);
  std::size_t n_elem = t.elements.size();
  std::size_t vn = n_elem * static_cast<std::size_t>(t.subelements);
  RfChunkPlan plan;
  plan.per_scatterer_bytes = (11 * vn + 2) * sizeof(double);
  int nb = std::min(kBandBins, pb.bins());
  std::size_t spec_bytes =
      static_cast<std::size_t>(pb.bins()) * n_elem * 2 * sizeof(double);
  std::size_t fftw_bytes = (static_cast<std::size_t>(pb.t_samples) / 2 + 1) * 2 * sizeof(double) +
                           static_cast<std::size_t>(pb.t_samples) * sizeof(double);
  plan.fixed_bytes = 2 * spec_bytes + fftw_bytes + vn * 3 * sizeof(double) +
                     static_cast<std::size_t>(worker_count()) *
                         scratch_bytes(vn, nb, static_cast<int>(n_elem));
  require(budget >= plan.fixed_bytes + plan.per_scatterer_bytes,
          "memory budget cannot hold the fixed buffers plus one scatterer");
  std::size_t usable = budget - plan.fixed_bytes;
  plan.block_scatterers = std::min(n_scatterers, usable / plan.per_scatterer_bytes);
  plan.blocks = static_cast<int>((n_scatterers + plan.block_scatterers - 1) /
                                 plan.block_scatterers);
  return plan;
}

RfFrame run_engine(const tissue::ScattererCloud& cloud, const Transducer& t, const TxEvent& tx,
                   const MediumParams& medium, double sampling_rate, double duration,
                   std::size_t block_scatterers, RfSimStats* stats) {
  check_inputs(cloud, t, tx, medium, duration);
  Passband pb = make_passband(t, medium, sampling_rate, duration);
  int n_elem = t.n_elements();
  int v = t.subelements;
  std::size_t vn = static_cast<std::size_t>(n_elem) * v;
  std::size_t n_scat = cloud.positions.size();

  EngineConfig cfg;
  cfg.dk = 2.0 * kPi * pb.df / medium.c;
  // dB/(cm MHz) to nepers/(m Hz), folded with the bin spacing so the
  // per-bin attenuation ratio is a single stored factor.
  double beta_hz = medium.attenuation_db_cm_mhz * (std::log(10.0) / 20.0) * 1e-4;
  cfg.beta = beta_hz * pb.df;
  cfg.elevation = t.elevation_height > 0.0;
  if (cfg.elevation) {
    cfg.wa = t.elevation_aperture_factor * t.elevation_height;
    cfg.inv_focus = 1.0 / t.elevation_focus;
    cfg.core_w = t.elevation_core_weight;
    cfg.tail_w = t.elevation_tail_weight;
  }

  Tracker tracker;
  SubApertures sub = tile_subelements(t);
  tracker.add(vn * 3 * sizeof(double));

  std::size_t spec_len = static_cast<std::size_t>(pb.bins()) * n_elem * 2;
  std::vector<double> global_spec(spec_len, 0.0);
  std::vector<double> block_spec(spec_len, 0.0);
  tracker.add(2 * spec_len * sizeof(double));

  int n_bands = (pb.bins() + kBandBins - 1) / kBandBins;
  int nb_max = std::min(kBandBins, pb.bins());
  std::size_t worker_scratch =
      static_cast<std::size_t>(worker_count()) * scratch_bytes(vn, nb_max, n_elem);
  tracker.add(worker_scratch);

  int n_blocks = static_cast<int>((n_scat + block_scatterers - 1) / block_scatterers);
  BlockGeometry geo;
  std::size_t geo_bytes = 0;
  for (int blk = 0; blk < n_blocks; ++blk) {
    std::size_t s0 = static_cast<std::size_t>(blk) * block_scatterers;
    std::size_t s1 = std::min(n_scat, s0 + block_scatterers);
    geo.resize(s1 - s0, vn);
    if (geo.bytes() != geo_bytes) {
      tracker.sub(geo_bytes);
      geo_bytes = geo.bytes();
      tracker.add(geo_bytes);
    }
    precompute_block(cloud, s0, s1, sub, cfg, t.half_width, geo);
    std::fill(block_spec.begin(), block_spec.end(), 0.0);
    // Bands own disjoint spectrum slices, so the per-bin accumulation order
    // is the scatterer order for every worker count and block size.
    parallel_for(static_cast<std::size_t>(n_bands), [&](std::size_t b0, std::size_t b1) {
      BandScratch sc;
      for (std::size_t b = b0; b < b1; ++b) {
        int jb0 = pb.j_lo + static_cast<int>(b) * kBandBins;
        int nb = std::min(kBandBins, pb.j_hi - jb0 + 1);
        accumulate_band(geo, s1 - s0, vn, v, tx, cfg, pb, jb0, nb, medium.c, sc,
                        block_spec.data());
      }
    });
    for (std::size_t i = 0; i < spec_len; ++i) global_spec[i] += block_spec[i];
  }
  tracker.sub(geo_bytes);

  // Weight by the pulse spectrum and inverse-transform to time.  The
  // accumulated phases use the e^{+ikr} convention with implicit e^{-i
  // omega t} time dependence; the backward DFT applies e^{+i omega t}, so
  // the spectrum is conjugated here.
  RfFrame frame;
  frame.n_samples = pb.t_samples;
  frame.n_elements = n_elem;
  frame.sampling_rate = sampling_rate;
  frame.t0 = 0.0;
  frame.tx = tx;
  frame.samples.assign(static_cast<std::size_t>(pb.t_samples) * n_elem, 0.0);

  double sigma = pulse_sigma(t);
  std::vector<double> weight(pb.bins());
  for (int j = pb.j_lo; j <= pb.j_hi; ++j) {
    double f = j * pb.df;
    double d = (f - t.center_frequency) / sigma;
    weight[j - pb.j_lo] = std::exp(-0.5 * d * d) / pb.t_samples;
  }

  std::size_t n_cbins = static_cast<std::size_t>(pb.t_samples) / 2 + 1;
  fftw_complex* in = fftw_alloc_complex(n_cbins);
  double* out = fftw_alloc_real(pb.t_samples);
  tracker.add(n_cbins * 2 * sizeof(double) + pb.t_samples * sizeof(double));
  require(in != nullptr && out != nullptr, "inverse transform allocation failed");
  fftw_plan plan = fftw_plan_dft_c2r_1d(pb.t_samples, in, out, FFTW_ESTIMATE);
  require(plan != nullptr, "inverse transform planning failed");
  for (int e = 0; e < n_elem; ++e) {
    std::memset(in, 0, n_cbins * sizeof(fftw_complex));
    for (int j = pb.j_lo; j <= pb.j_hi; ++j) {
      std::size_t idx = static_cast<std::size_t>(j - pb.j_lo) * n_elem * 2 + 2 * e;
      double w = weight[j - pb.j_lo];
      in[j][0] = global_spec[idx] * w;
      in[j][1] = -global_spec[idx + 1] * w;
    }
    fftw_execute(plan);
    for (int m = 0; m < pb.t_samples; ++m) {
      frame.samples[static_cast<std::size_t>(m) * n_elem + e] = out[m];
    }
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);

  for (double s : frame.samples) {
    require(std::isfinite(s), "non-finite output sample: simulation unstable");
  }

  if (stats) {
    stats->blocks = n_blocks;
    stats->frequencies = pb.bins();
    stats->peak_tracked_bytes = tracker.peak;
    stats->pair_bin_products =
        static_cast<std::uint64_t>(n_scat) * vn * static_cast<std::uint64_t>(pb.bins());
  }
  return frame;
}

std::string fmt17(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

RfFrame zero_frame(const Transducer& t, const TxEvent& tx, const MediumParams& medium,
                   double sampling_rate, double duration) {
  Passband pb = make_passband(t, medium, sampling_rate, duration);
  RfFrame frame;
  frame.n_samples = pb.t_samples;
  frame.n_elements = t.n_elements();
  frame.sampling_rate = sampling_rate;
  frame.t0 = 0.0;
  frame.tx = tx;
  frame.samples.assign(static_cast<std::size_t>(pb.t_samples) * t.n_elements(), 0.0);
  return frame;
}

}  // namespace

RfChunkPlan plan_rf_chunks(const Transducer& t, std::size_t n_scatterers,
                           const MediumParams& medium, double sampling_rate, double duration,
                           std::size_t budget) {
  validate_transducer(t);
  require(n_scatterers > 0, "scatterer cloud is empty");
  return plan_layout(t, n_scatterers, medium, sampling_rate, duration, budget);
}

RfFrame simulate_rf(const tissue::ScattererCloud& cloud, const Transducer& t, const TxEvent& tx,
                    const MediumParams& medium, double sampling_rate, double duration,
                    RfSimStats* stats) {
  validate_transducer(t);
  RfChunkPlan plan = plan_layout(t, cloud.positions.size(), medium, sampling_rate, duration,
                                 medium.scatterer_memory_budget);
  require(plan.blocks == 1,
          "pair geometry exceeds the scatterer memory budget; use simulate_rf_chunked");
  return run_engine(cloud, t, tx, medium, sampling_rate, duration, cloud.positions.size(), stats);
}

RfFrame simulate_rf_chunked(const tissue::ScattererCloud& cloud, const Transducer& t,
                            const TxEvent& tx, const MediumParams& medium, double sampling_rate,
                            double duration, std::size_t budget, RfSimStats* stats) {
  validate_transducer(t);
  RfChunkPlan plan =
      plan_layout(t, cloud.positions.size(), medium, sampling_rate, duration, budget);
  return run_engine(cloud, t, tx, medium, sampling_rate, duration, plan.block_scatterers, stats);
}

std::vector<RfFrame> compose_frames(const std::vector<tissue::ScattererCloud>& tissue_frames,
                                    const std::vector<tissue::ScattererCloud>& flow_frames,
                                    bool static_tissue, const Transducer& t, const TxEvent& tx,
                                    const MediumParams& medium, double sampling_rate,
                                    double duration, ComposeStats* stats) {
  require(!flow_frames.empty(), "no flow frames to compose");
  if (static_tissue) {
    require(!tissue_frames.empty(), "static tissue requires one tissue cloud");
  } else {
    require(tissue_frames.size() == flow_frames.size(),
            "tissue and flow frame counts do not match");
  }
  ComposeStats local;
  auto simulate = [&](const tissue::ScattererCloud& cloud, int& counter) {
    if (cloud.positions.empty()) return zero_frame(t, tx, medium, sampling_rate, duration);
    ++counter;
    return simulate_rf_chunked(cloud, t, tx, medium, sampling_rate, duration,
                               medium.scatterer_memory_budget);
  };

  std::vector<RfFrame> out;
  out.reserve(flow_frames.size());
  RfFrame tissue_rf;
  if (static_tissue) tissue_rf = simulate(tissue_frames[0], local.tissue_simulations);
  for (std::size_t i = 0; i < flow_frames.size(); ++i) {
    if (!static_tissue) tissue_rf = simulate(tissue_frames[i], local.tissue_simulations);
    RfFrame flow_rf = simulate(flow_frames[i], local.flow_simulations);
    RfFrame total = tissue_rf;
    for (std::size_t k = 0; k < total.samples.size(); ++k) {
      total.samples[k] += flow_rf.samples[k];
    }
    out.push_back(std::move(total));
  }
  if (stats) *stats = local;
  return out;
}

void write_rf_frame(const std::string& path, const RfFrame& frame, int frame_index) {
  ContainerHeader h;
  h.emplace_back("kind", "rf");
  h.emplace_back("samples", std::to_string(frame.n_samples));
  h.emplace_back("elements", std::to_string(frame.n_elements));
  h.emplace_back("sampling_rate", fmt17(frame.sampling_rate));
  h.emplace_back("t0", fmt17(frame.t0));
  h.emplace_back("angle", fmt17(frame.tx.angle));
  h.emplace_back("frame", std::to_string(frame_index));
  std::vector<float> narrow(frame.samples.begin(), frame.samples.end());
  write_container(path, h, make_payload(std::span<const float>(narrow)));
}

std::pair<RfFrame, int> read_rf_frame(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(find_header(header, "kind") && header_value(header, "kind") == "rf", path,
          ": not an rf frame container");
  RfFrame frame;
  frame.n_samples = std::stoi(header_value(header, "samples"));
  frame.n_elements = std::stoi(header_value(header, "elements"));
  frame.sampling_rate = std::stod(header_value(header, "sampling_rate"));
  frame.t0 = std::stod(header_value(header, "t0"));
  frame.tx.angle = std::stod(header_value(header, "angle"));
  int frame_index = std::stoi(header_value(header, "frame"));
  frame.samples = as_real_f64(payload);
  require(frame.samples.size() == static_cast<std::size_t>(frame.n_samples) *
                                      static_cast<std::size_t>(frame.n_elements),
          path, ": sample count does not match header dimensions");
  return {std::move(frame), frame_index};
}

}  // namespace fqf::rf
