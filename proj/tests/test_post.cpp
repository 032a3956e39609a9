#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "fqf/beamform/das.hpp"
#include "fqf/core/error.hpp"
#include "fqf/core/grid.hpp"
#include "fqf/post/metrics.hpp"
#include "fqf/post/render.hpp"
#include "fqf/post/svd.hpp"

using namespace fqf;
using namespace fqf::post;
using beamform::GridSpec;
using beamform::IqVolume;
using std::complex;

namespace {

std::string temp_dir(const std::string& leaf) {
  auto dir = std::filesystem::temp_directory_path() / "fqf_post_tests" / leaf;
  std::filesystem::create_directories(dir);
  return dir.string();
}

GridSpec grid3(int nx, int ny, int nz, double s = 1e-4) {
  GridSpec g;
  g.dims = {nx, ny, nz};
  g.spacing = {s, s, s};
  g.origin = {0, 0, 0};
  return g;
}

template <typename Fill>
std::vector<IqVolume> make_ensemble(const GridSpec& g, int frames, Fill fill) {
  std::vector<IqVolume> out(frames);
  for (int f = 0; f < frames; ++f) {
    out[f].grid = g;
    out[f].frame_index = f;
    out[f].n_angles = 1;
    out[f].values.resize(g.num_points());
    for (std::size_t v = 0; v < g.num_points(); ++v) out[f].values[v] = fill(f, v);
  }
  return out;
}

double frobenius(const std::vector<IqVolume>& e) {
  double s = 0.0;
  for (const auto& v : e)
    for (const auto& z : v.values) s += std::norm(z);
  return std::sqrt(s);
}

double frobenius_diff(const std::vector<IqVolume>& a, const std::vector<IqVolume>& b) {
  double s = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f)
    for (std::size_t v = 0; v < a[f].values.size(); ++v)
      s += std::norm(a[f].values[v] - b[f].values[v]);
  return std::sqrt(s);
}

// Frozen reference: mean local SSIM evaluated by direct window loops.  Window
// per axis is the largest odd size <= min(11, dim); Gaussian taps sigma 1.5
// normalized per window; only fully interior window positions contribute.
double ssim_reference(const VoxelGrid& a, const VoxelGrid& b) {
  const auto& dims = a.dims();
  int half[3];
  std::array<std::vector<double>, 3> taps;
  for (int ax = 0; ax < 3; ++ax) {
    int win = std::min(11, dims[ax]);
    if (win % 2 == 0) --win;
    half[ax] = win / 2;
    taps[ax].resize(win);
    for (int t = 0; t < win; ++t) {
      double d = t - half[ax];
      taps[ax][t] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  std::size_t count = 0;
  for (int k = half[2]; k < dims[2] - half[2]; ++k)
    for (int j = half[1]; j < dims[1] - half[1]; ++j)
      for (int i = half[0]; i < dims[0] - half[0]; ++i) {
        double wsum = 0, ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
        for (int dk = -half[2]; dk <= half[2]; ++dk)
          for (int dj = -half[1]; dj <= half[1]; ++dj)
            for (int di = -half[0]; di <= half[0]; ++di) {
              double w = taps[0][di + half[0]] * taps[1][dj + half[1]] * taps[2][dk + half[2]];
              double va = a.at(i + di, j + dj, k + dk);
              double vb = b.at(i + di, j + dj, k + dk);
              wsum += w;
              ma += w * va;
              mb += w * vb;
              aa += w * va * va;
              bb += w * vb * vb;
              ab += w * va * vb;
            }
        ma /= wsum;
        mb /= wsum;
        aa = aa / wsum - ma * ma;
        bb = bb / wsum - mb * mb;
        ab = ab / wsum - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * ab + c2)) /
                 ((ma * ma + mb * mb + c1) * (aa + bb + c2));
        ++count;
      }
  return total / static_cast<double>(count);
}

VoxelGrid image2(int nx, int nz, double fillv = 0.0) {
  VoxelGrid img({nx, 1, nz}, {1, 1, 1}, {0, 0, 0});
  std::fill(img.data().begin(), img.data().end(), fillv);
  return img;
}

double parse_field(const std::string& json, const std::string& key) {
  auto pos = json.find("\"" + key + "\":");
  REQUIRE(pos != std::string::npos);
  pos = json.find(':', pos) + 1;
  return std::stod(json.substr(pos));
}

}  // namespace

TEST_CASE("svd filter removes a static ensemble and keeps identity") {
  auto g = grid3(10, 1, 20);
  std::mt19937_64 rng(401);
  std::normal_distribution<double> nd;
  std::vector<complex<double>> pattern(g.num_points());
  for (auto& z : pattern) z = {nd(rng), nd(rng)};
  const int frames = 6;
  auto ens = make_ensemble(g, frames, [&](int, std::size_t v) { return pattern[v]; });
  double scale = frobenius(ens);

  SvdReport rep;
  auto high = svd_filter(ens, 2, frames, &rep);
  CHECK(high.size() == frames);
  CHECK(frobenius(high) <= 1e-9 * scale);
  CHECK(rep.singular_values.size() == frames);
  CHECK(rep.singular_values[0] == doctest::Approx(scale).epsilon(1e-12));
  for (int j = 1; j < frames; ++j) CHECK(rep.singular_values[j] <= 1e-9 * rep.singular_values[0]);
  CHECK(rep.keep_lo == 2);
  CHECK(rep.keep_hi == frames);
  CHECK(rep.n_modes == frames);

  auto all = svd_filter(ens, 1, frames);
  CHECK(frobenius_diff(all, ens) <= 1e-9 * scale);
  for (int f = 0; f < frames; ++f) {
    CHECK(all[f].frame_index == f);
    CHECK(all[f].grid.dims == g.dims);
  }
}

TEST_CASE("svd bands conserve energy and sum back to the input") {
  auto g = grid3(15, 2, 10);
  std::mt19937_64 rng(402);
  std::normal_distribution<double> nd;
  const int frames = 7;
  auto ens = make_ensemble(g, frames, [&](int, std::size_t) {
    return complex<double>{nd(rng), nd(rng)};
  });

  SvdReport rep;
  auto low = svd_filter(ens, 1, 3, &rep);

  double energy = 0.0;
  for (const auto& v : ens)
    for (const auto& z : v.values) energy += std::norm(z);
  double spectral = 0.0;
  for (double s : rep.singular_values) spectral += s * s;
  CHECK(spectral == doctest::Approx(energy).epsilon(1e-9));

  for (std::size_t j = 0; j + 1 < rep.singular_values.size(); ++j) {
    CHECK(rep.singular_values[j] >= rep.singular_values[j + 1]);
    CHECK(rep.singular_values[j + 1] >= 0.0);
  }

  auto highpass = svd_filter(ens, 4, frames);
  double scale = frobenius(ens);
  auto sum = low;
  for (int f = 0; f < frames; ++f)
    for (std::size_t v = 0; v < sum[f].values.size(); ++v)
      sum[f].values[v] += highpass[f].values[v];
  CHECK(frobenius_diff(sum, ens) <= 1e-9 * scale);
}

TEST_CASE("svd mode correlation matrix is symmetric with unit diagonal") {
  auto g = grid3(12, 1, 14);
  std::mt19937_64 rng(403);
  std::normal_distribution<double> nd;
  const int frames = 5;
  auto ens = make_ensemble(g, frames, [&](int, std::size_t) {
    return complex<double>{nd(rng), nd(rng)};
  });

  SvdReport rep;
  svd_filter(ens, 1, frames, &rep);
  REQUIRE(rep.mode_correlation.size() == static_cast<std::size_t>(frames) * frames);
  for (int i = 0; i < frames; ++i) {
    CHECK(rep.mode_correlation[i * frames + i] == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < frames; ++j) {
      double rij = rep.mode_correlation[i * frames + j];
      double rji = rep.mode_correlation[j * frames + i];
      CHECK(std::abs(rij - rji) <= 1e-12);
      CHECK(std::abs(rij) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("svd filter raises the in-vessel power fraction") {
  auto g = grid3(20, 1, 20);
  std::mt19937_64 rng(404);
  std::normal_distribution<double> nd;
  std::vector<complex<double>> tissue(g.num_points());
  for (auto& z : tissue) z = complex<double>{nd(rng), nd(rng)} * 100.0;
  auto in_vessel = [&](std::size_t v) {
    int i = static_cast<int>(v % 20);
    return i == 8 || i == 9;
  };
  const int frames = 10;
  auto ens = make_ensemble(g, frames, [&](int, std::size_t v) {
    complex<double> z = tissue[v];
    if (in_vessel(v)) z += complex<double>{nd(rng), nd(rng)};
    return z;
  });

  auto filtered = svd_filter(ens, 2, frames);
  auto frac = [&](const VoxelGrid& pd) {
    double mask = 0.0, total = 0.0;
    for (std::size_t v = 0; v < g.num_points(); ++v) {
      total += pd.data()[v];
      if (in_vessel(v)) mask += pd.data()[v];
    }
    return mask / total;
  };
  double before = frac(power_doppler(ens));
  double after = frac(power_doppler(filtered));
  CHECK(after > before);
  CHECK(before < 0.3);
  CHECK(after > 0.9);
}

TEST_CASE("svd filter rejects degenerate input") {
  auto g = grid3(4, 1, 4);
  auto ens = make_ensemble(g, 3, [](int f, std::size_t v) {
    return complex<double>(static_cast<double>(f + 1), static_cast<double>(v));
  });

  CHECK_THROWS_AS(svd_filter({}, 1, 1), Error);
  CHECK_THROWS_AS(svd_filter(std::vector<IqVolume>(ens.begin(), ens.begin() + 1), 1, 1), Error);
  CHECK_THROWS_AS(svd_filter(ens, 0, 2), Error);
  CHECK_THROWS_AS(svd_filter(ens, 1, 4), Error);
  CHECK_THROWS_AS(svd_filter(ens, 3, 2), Error);

  auto zero = make_ensemble(g, 3, [](int, std::size_t) { return complex<double>{}; });
  CHECK_THROWS_AS(svd_filter(zero, 1, 3), Error);

  auto tall = make_ensemble(grid3(1, 1, 2), 3, [](int f, std::size_t v) {
    return complex<double>(f + 1.0, v + 1.0);
  });
  CHECK_THROWS_AS(svd_filter(tall, 1, 3), Error);  // more frames than voxels

  auto ragged = ens;
  ragged[1].grid.dims = {2, 2, 4};
  ragged[1].values.resize(16);
  CHECK_THROWS_AS(svd_filter(ragged, 1, 3), Error);

  auto short_frame = ens;
  short_frame[2].values.pop_back();
  CHECK_THROWS_AS(svd_filter(short_frame, 1, 3), Error);
}

TEST_CASE("power doppler sums squared magnitudes over frames") {
  auto g = grid3(6, 1, 5);
  const int frames = 100;
  // Unit-magnitude phasors on the exact lattice {1, i, -1, -i} keep every
  // per-frame |IQ|^2 contribution exactly 1.
  auto ens = make_ensemble(g, frames, [](int f, std::size_t v) {
    switch ((f + static_cast<int>(v)) % 4) {
      case 0: return complex<double>{1, 0};
      case 1: return complex<double>{0, 1};
      case 2: return complex<double>{-1, 0};
      default: return complex<double>{0, -1};
    }
  });
  auto pd = power_doppler(ens);
  CHECK(pd.dims() == std::array<int, 3>{6, 1, 5});
  CHECK(pd.spacing().x == g.spacing.x);
  CHECK(pd.origin().z == g.origin.z);
  for (double v : pd.data()) CHECK(v == 100.0);

  auto doubled = ens;
  for (auto& fr : doubled)
    for (auto& z : fr.values) z *= 2.0;
  auto pd2 = power_doppler(doubled);
  for (std::size_t v = 0; v < pd.data().size(); ++v) CHECK(pd2.data()[v] == 4.0 * pd.data()[v]);

  CHECK_THROWS_AS(power_doppler({}), Error);
  auto ragged = ens;
  ragged[3].values.pop_back();
  CHECK_THROWS_AS(power_doppler(ragged), Error);
  auto mixed = ens;
  mixed[1].grid.dims = {5, 1, 6};
  mixed[1].values.resize(30);
  CHECK_THROWS_AS(power_doppler(mixed), Error);
}

TEST_CASE("render_db maps peak to one and the floor to zero") {
  VoxelGrid v({4, 1, 1}, {1, 1, 1}, {0, 0, 0});
  v.at(0, 0, 0) = 1.0;
  v.at(1, 0, 0) = 0.5;
  v.at(2, 0, 0) = 1e-9;
  v.at(3, 0, 0) = 0.0;

  auto amp = render_db(v, 60.0, DbScale::amplitude);
  CHECK(amp.at(0, 0, 0) == 1.0);
  CHECK(amp.at(1, 0, 0) == doctest::Approx((60.0 - 20.0 * std::log10(2.0)) / 60.0).epsilon(1e-14));
  CHECK(amp.at(1, 0, 0) == doctest::Approx(0.8997).epsilon(2e-4));
  CHECK(amp.at(2, 0, 0) == 0.0);  // -180 dB clips to the floor
  CHECK(amp.at(3, 0, 0) == 0.0);

  auto pow = render_db(v, 60.0, DbScale::power);
  CHECK(pow.at(0, 0, 0) == 1.0);
  CHECK(pow.at(1, 0, 0) == doctest::Approx((60.0 - 10.0 * std::log10(2.0)) / 60.0).epsilon(1e-14));
  CHECK(pow.at(1, 0, 0) == doctest::Approx(0.9498).epsilon(2e-4));

  // Magnitudes drive the mapping, so a negative peak still lands at 1.
  VoxelGrid neg({2, 1, 1}, {1, 1, 1}, {0, 0, 0});
  neg.at(0, 0, 0) = -1.0;
  neg.at(1, 0, 0) = 0.5;
  auto rn = render_db(neg, 60.0, DbScale::amplitude);
  CHECK(rn.at(0, 0, 0) == 1.0);

  VoxelGrid zeros({3, 1, 3}, {1, 1, 1}, {0, 0, 0});
  CHECK_THROWS_AS(render_db(zeros, 60.0, DbScale::amplitude), Error);
  CHECK_THROWS_AS(render_db(v, 0.0, DbScale::amplitude), Error);
  CHECK_THROWS_AS(render_db(v, -5.0, DbScale::amplitude), Error);
}

TEST_CASE("render_db preserves intensity ordering") {
  std::mt19937_64 rng(405);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  VoxelGrid v({16, 1, 16}, {1, 1, 1}, {0, 0, 0});
  for (auto& x : v.data()) x = std::pow(ud(rng), 4.0);
  auto r = render_db(v, 40.0, DbScale::amplitude);

  std::vector<std::size_t> order(v.data().size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v.data()[a] < v.data()[b]; });
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    CHECK(r.data()[order[i]] <= r.data()[order[i + 1]]);
    CHECK(r.data()[order[i]] >= 0.0);
    CHECK(r.data()[order[i]] <= 1.0);
  }
}

TEST_CASE("bmode renders the envelope") {
  auto g = grid3(8, 1, 8);
  IqVolume iq;
  iq.grid = g;
  iq.n_angles = 1;
  iq.values.assign(g.num_points(), complex<double>{});
  iq.values[27] = {0.0, 0.7};
  auto img = bmode(iq, 75.0);
  for (std::size_t v = 0; v < img.data().size(); ++v) {
    if (v == 27)
      CHECK(img.data()[v] == 1.0);
    else
      CHECK(img.data()[v] == 0.0);
  }

  // Constant magnitude with varying phase renders flat at the peak.
  IqVolume flat = iq;
  for (std::size_t v = 0; v < flat.values.size(); ++v)
    flat.values[v] = std::polar(0.7, 0.37 * static_cast<double>(v));
  auto fimg = bmode(flat, 75.0);
  for (double x : fimg.data()) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));

  // Complex speckle spans a wide portion of the display range.
  std::mt19937_64 rng(406);
  std::normal_distribution<double> nd;
  IqVolume speckle;
  speckle.grid = grid3(64, 1, 64);
  speckle.n_angles = 1;
  speckle.values.resize(speckle.grid.num_points());
  for (auto& z : speckle.values) z = {nd(rng), nd(rng)};
  auto simg = bmode(speckle, 75.0);
  auto [lo, hi] = std::minmax_element(simg.data().begin(), simg.data().end());
  CHECK(*hi - *lo >= 0.5);

  IqVolume empty;
  CHECK_THROWS_AS(bmode(empty, 75.0), Error);
}

TEST_CASE("mip collapses one axis to its maximum") {
  VoxelGrid v({3, 4, 5}, {2, 1, 1}, {0, -1, 3});
  std::mt19937_64 rng(407);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  for (auto& x : v.data()) x = ud(rng);

  for (int axis = 0; axis < 3; ++axis) {
    auto m = mip(v, axis);
    auto dims = v.dims();
    auto want_dims = dims;
    want_dims[axis] = 1;
    CHECK(m.dims() == want_dims);
    CHECK(m.spacing().x == v.spacing().x);
    CHECK(m.origin().y == v.origin().y);
    for (int k = 0; k < want_dims[2]; ++k)
      for (int j = 0; j < want_dims[1]; ++j)
        for (int i = 0; i < want_dims[0]; ++i) {
          double best = -std::numeric_limits<double>::infinity();
          for (int t = 0; t < dims[axis]; ++t) {
            int ii = axis == 0 ? t : i, jj = axis == 1 ? t : j, kk = axis == 2 ? t : k;
            best = std::max(best, v.at(ii, jj, kk));
          }
          CHECK(m.at(i, j, k) == best);
        }
    CHECK(*std::max_element(m.data().begin(), m.data().end()) ==
          *std::max_element(v.data().begin(), v.data().end()));
  }

  // Projections along different axes commute.
  auto xz = mip(mip(v, 0), 2);
  auto zx = mip(mip(v, 2), 0);
  for (std::size_t i = 0; i < xz.data().size(); ++i) CHECK(xz.data()[i] == zx.data()[i]);

  // A volume constant along the projected axis reproduces its slice.
  VoxelGrid cst({3, 2, 4}, {1, 1, 1}, {0, 0, 0});
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 3; ++i) cst.at(i, j, k) = 10.0 * i + j;
  auto mz = mip(cst, 2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) CHECK(mz.at(i, j, 0) == cst.at(i, j, 0));

  CHECK_THROWS_AS(mip(v, 3), Error);
  CHECK_THROWS_AS(mip(v, -1), Error);
  VoxelGrid vec({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, 3);
  CHECK_THROWS_AS(mip(vec, 0), Error);
}

TEST_CASE("psnr follows the inverse-mse law on representative values") {
  // Representative (mse, psnr_db) pairs with psnr rounded to two decimals.
  const struct {
    double mse, psnr;
  } pairs[] = {
      {0.0027487, 25.61}, {0.00234, 26.30}, {0.00311, 25.08}, {0.00487, 23.13},
      {0.00344, 24.63},   {0.00745, 21.28}, {0.00168, 27.75}, {0.00237, 26.25},
      {0.00115, 29.41},   {0.00433, 23.64},
  };
  for (const auto& p : pairs) {
    auto a = image2(16, 16, 0.0);
    auto b = image2(16, 16, std::sqrt(p.mse));
    auto r = metrics(a, b);
    CHECK(r.mse == doctest::Approx(p.mse).epsilon(1e-12));
    CHECK(std::abs(r.psnr - p.psnr) <= 0.02);
    CHECK(std::abs(r.psnr - 10.0 * std::log10(1.0 / r.mse)) <= 1e-12);
  }

  auto a = image2(12, 9, 0.25);
  auto r = metrics(a, a);
  CHECK(r.mse == 0.0);
  CHECK(std::isinf(r.psnr));
  CHECK(r.psnr > 0.0);
  CHECK(r.ssim == 1.0);
}

TEST_CASE("ssim matches a frozen direct evaluation") {
  std::mt19937_64 rng(408);
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  auto a = image2(24, 20);
  auto b = image2(24, 20);
  for (auto& x : a.data()) x = ud(rng);
  for (std::size_t i = 0; i < b.data().size(); ++i)
    b.data()[i] = std::clamp(a.data()[i] + 0.1 * (ud(rng) - 0.5), 0.0, 1.0);
  auto r = metrics(a, b);
  CHECK(r.ssim == doctest::Approx(ssim_reference(a, b)).epsilon(1e-12));
  CHECK(r.ssim < 1.0);
  CHECK(r.ssim > -1.0 - 1e-12);

  // Full 3D images shrink the window on short axes.
  VoxelGrid a3({9, 7, 8}, {1, 1, 1}, {0, 0, 0});
  VoxelGrid b3({9, 7, 8}, {1, 1, 1}, {0, 0, 0});
  for (auto& x : a3.data()) x = ud(rng);
  for (auto& x : b3.data()) x = ud(rng);
  auto r3 = metrics(a3, b3);
  CHECK(r3.ssim == doctest::Approx(ssim_reference(a3, b3)).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric, exact on identity, and translation invariant") {
  std::mt19937_64 rng(409);
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  auto a = image2(40, 36);
  auto b = image2(40, 36);
  for (int k = 10; k <= 19; ++k)
    for (int i = 10; i <= 23; ++i) {
      a.at(i, 0, k) = ud(rng);
      b.at(i, 0, k) = ud(rng);
    }

  auto rab = metrics(a, b);
  auto rba = metrics(b, a);
  CHECK(std::abs(rab.ssim - rba.ssim) <= 1e-15);
  CHECK(rab.mse == rba.mse);
  CHECK(rab.ssim < 1.0);

  auto raa = metrics(a, a);
  CHECK(raa.ssim == 1.0);

  // Shift both images by the same whole-pixel offset; the margins keep every
  // window's content identical, so all three metrics are unchanged.
  auto as = image2(40, 36);
  auto bs = image2(40, 36);
  for (int k = 10; k <= 19; ++k)
    for (int i = 10; i <= 23; ++i) {
      as.at(i + 3, 0, k + 2) = a.at(i, 0, k);
      bs.at(i + 3, 0, k + 2) = b.at(i, 0, k);
    }
  auto rs = metrics(as, bs);
  CHECK(std::abs(rs.ssim - rab.ssim) <= 1e-12);
  CHECK(rs.mse == doctest::Approx(rab.mse).epsilon(1e-12));
  CHECK(std::abs(rs.psnr - rab.psnr) <= 1e-10);
}

TEST_CASE("metrics reject mismatched shapes") {
  auto a = image2(8, 8);
  auto b = image2(8, 9);
  CHECK_THROWS_AS(metrics(a, b), Error);
  VoxelGrid vec({8, 1, 8}, {1, 1, 1}, {0, 0, 0}, 3);
  CHECK_THROWS_AS(metrics(a, vec), Error);
  CHECK_THROWS_AS(metrics(VoxelGrid{}, VoxelGrid{}), Error);
}

TEST_CASE("ground truth pd splats a blob around each scatterer") {
  auto g = grid3(21, 1, 21, 1.0);
  Vec3 p{10.0, 0.0, 10.0};
  std::vector<std::vector<Vec3>> frames(5, std::vector<Vec3>{p});
  auto pd = ground_truth_pd(frames, g, 1.0);

  CHECK(pd.at(10, 0, 10) == 1.0);
  CHECK(pd.at(11, 0, 10) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(pd.at(12, 0, 10) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  CHECK(pd.at(13, 0, 10) == doctest::Approx(std::exp(-4.5)).epsilon(1e-12));
  CHECK(pd.at(14, 0, 10) == 0.0);  // beyond the three-sigma truncation
  CHECK(pd.at(13, 0, 11) == 0.0);  // spherical cutoff, not a box
  for (double v : pd.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // Two far-apart clusters leave the midline empty.
  std::vector<std::vector<Vec3>> two(1);
  two[0] = {{3, 0, 3}, {4, 0, 3}, {17, 0, 17}, {17, 0, 16}};
  auto pd2 = ground_truth_pd(two, g, 1.0);
  CHECK(pd2.at(3, 0, 3) > 0.5);
  CHECK(pd2.at(17, 0, 17) > 0.5);
  for (int i = 0; i < 21; ++i) CHECK(pd2.at(i, 0, 10) == 0.0);

  // Off-grid scatterers contribute only their in-grid tail.
  std::vector<std::vector<Vec3>> edge(1, std::vector<Vec3>{{-1.0, 0.0, 10.0}});
  auto pd3 = ground_truth_pd(edge, g, 1.0);
  CHECK(pd3.at(0, 0, 10) == 1.0);
  CHECK(pd3.at(2, 0, 10) == doctest::Approx(std::exp(-4.0)).epsilon(1e-12));

  CHECK_THROWS_AS(ground_truth_pd(frames, g, 0.0), Error);
  CHECK_THROWS_AS(ground_truth_pd({}, g, 1.0), Error);
}

TEST_CASE("ground truth pd covers a tube phantom") {
  auto g = grid3(33, 33, 25, 1.0);
  const double cx = 16.0, cy = 16.0, radius = 8.0;
  std::mt19937_64 rng(410);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<std::vector<Vec3>> frames(3);
  for (auto& fr : frames) {
    fr.reserve(20000);
    for (int n = 0; n < 20000; ++n) {
      double r = radius * std::sqrt(ud(rng));
      double phi = 2.0 * 3.14159265358979323846 * ud(rng);
      // Extend past the z faces so edge voxels see full occupancy.
      double z = -3.0 + 31.0 * ud(rng);
      fr.push_back({cx + r * std::cos(phi), cy + r * std::sin(phi), z});
    }
  }
  auto pd = ground_truth_pd(frames, g, 1.0);

  double peak = *std::max_element(pd.data().begin(), pd.data().end());
  CHECK(peak == 1.0);
  double thresh = 0.5;
  std::size_t inter = 0, support = 0, mask = 0;
  for (int k = 0; k < 25; ++k)
    for (int j = 0; j < 33; ++j)
      for (int i = 0; i < 33; ++i) {
        bool in_support = pd.at(i, j, k) >= thresh;
        bool in_mask = std::hypot(i - cx, j - cy) <= radius;
        support += in_support;
        mask += in_mask;
        inter += in_support && in_mask;
      }
  double dice = 2.0 * static_cast<double>(inter) / static_cast<double>(support + mask);
  CHECK(dice >= 0.9);
}

TEST_CASE("pgm export writes exact bytes") {
  auto dir = temp_dir("pgm");
  VoxelGrid img({3, 1, 2}, {1, 1, 1}, {0, 0, 0});
  img.at(0, 0, 0) = 0.0;
  img.at(1, 0, 0) = 0.25;
  img.at(2, 0, 0) = 0.5;
  img.at(0, 0, 1) = 0.75;
  img.at(1, 0, 1) = 1.0;
  img.at(2, 0, 1) = 0.5;
  auto path = dir + "/tiny.pgm";
  write_pgm(path, img);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string expect = "P5\n3 2\n255\n";
  expect += static_cast<char>(0);
  expect += static_cast<char>(64);
  expect += static_cast<char>(128);
  expect += static_cast<char>(191);
  expect += static_cast<char>(255);
  expect += static_cast<char>(128);
  CHECK(bytes == expect);

  // Out-of-range values clamp instead of wrapping; a single-row image is fine.
  VoxelGrid hot({2, 1, 1}, {1, 1, 1}, {0, 0, 0});
  hot.at(0, 0, 0) = 1.5;
  hot.at(1, 0, 0) = -0.25;
  auto hpath = dir + "/hot.pgm";
  write_pgm(hpath, hot);
  std::ifstream hin(hpath, std::ios::binary);
  std::string hbytes((std::istreambuf_iterator<char>(hin)), std::istreambuf_iterator<char>());
  CHECK(hbytes == std::string("P5\n2 1\n255\n") + static_cast<char>(255) + static_cast<char>(0));

  // A z-singleton image maps x to width and y to height.
  VoxelGrid flat({3, 2, 1}, {1, 1, 1}, {0, 0, 0});
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 3; ++i) flat.at(i, j, 0) = (j == 0) ? 0.0 : 1.0;
  auto fpath = dir + "/flat.pgm";
  write_pgm(fpath, flat);
  std::ifstream fin(fpath, std::ios::binary);
  std::string fbytes((std::istreambuf_iterator<char>(fin)), std::istreambuf_iterator<char>());
  std::string fexpect = "P5\n3 2\n255\n";
  for (int n = 0; n < 3; ++n) fexpect += static_cast<char>(0);
  for (int n = 0; n < 3; ++n) fexpect += static_cast<char>(255);
  CHECK(fbytes == fexpect);

  VoxelGrid solid({3, 2, 2}, {1, 1, 1}, {0, 0, 0});
  CHECK_THROWS_AS(write_pgm(dir + "/bad.pgm", solid), Error);
  VoxelGrid vec({3, 1, 2}, {1, 1, 1}, {0, 0, 0}, 3);
  CHECK_THROWS_AS(write_pgm(dir + "/bad2.pgm", vec), Error);
}

TEST_CASE("metrics reports serialize to csv and json") {
  MetricsReport r;
  r.mse = 0.0027487;
  r.psnr = 25.608693468296264;
  r.ssim = 0.9021;

  auto csv = metrics_csv(r);
  REQUIRE(!csv.empty());
  CHECK(csv.back() == '\n');
  auto body = csv.substr(0, csv.size() - 1);
  auto c1 = body.find(',');
  auto c2 = body.find(',', c1 + 1);
  REQUIRE(c1 != std::string::npos);
  REQUIRE(c2 != std::string::npos);
  CHECK(body.find(',', c2 + 1) == std::string::npos);
  CHECK(std::stod(body.substr(0, c1)) == r.mse);
  CHECK(std::stod(body.substr(c1 + 1, c2 - c1 - 1)) == r.psnr);
  CHECK(std::stod(body.substr(c2 + 1)) == r.ssim);

  auto json = metrics_json(r);
  CHECK(json.front() == '{');
  CHECK(parse_field(json, "mse") == r.mse);
  CHECK(parse_field(json, "psnr") == r.psnr);
  CHECK(parse_field(json, "ssim") == r.ssim);

  MetricsReport ident;
  ident.mse = 0.0;
  ident.psnr = std::numeric_limits<double>::infinity();
  ident.ssim = 1.0;
  auto icsv = metrics_csv(ident);
  CHECK(icsv.find(",inf,") != std::string::npos);
  auto ijson = metrics_json(ident);
  CHECK(ijson.find("\"psnr\": \"inf\"") != std::string::npos);
}
