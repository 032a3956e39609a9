#include "fqf/post/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::post {

namespace {

constexpr double kC1 = 1e-4;  // (K1 * L)^2 with K1 = 0.01, L = 1
constexpr double kC2 = 9e-4;  // (K2 * L)^2 with K2 = 0.03, L = 1

// Mean local SSIM over fully interior window positions.  The window per axis
// is the largest odd size <= min(11, dim); taps are Gaussian with sigma 1.5,
// normalized jointly over the window.
double mean_ssim(const VoxelGrid& a, const VoxelGrid& b) {
  const auto& dims = a.dims();
  int half[3], win[3];
  std::array<std::vector<double>, 3> taps;
  for (int ax = 0; ax < 3; ++ax) {
    int w = std::min(11, dims[ax]);
    if (w % 2 == 0) --w;
    win[ax] = w;
    half[ax] = w / 2;
    taps[ax].resize(w);
    for (int t = 0; t < w; ++t) {
      double d = t - half[ax];
      taps[ax][t] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    }
  }
  std::vector<double> weight(static_cast<std::size_t>(win[0]) * win[1] * win[2]);
  double wsum = 0.0;
  for (int dk = 0; dk < win[2]; ++dk)
    for (int dj = 0; dj < win[1]; ++dj)
      for (int di = 0; di < win[0]; ++di) {
        double w = taps[0][di] * taps[1][dj] * taps[2][dk];
        weight[di + static_cast<std::size_t>(win[0]) * (dj + static_cast<std::size_t>(win[1]) * dk)] = w;
        wsum += w;
      }
  for (double& w : weight) w /= wsum;

  const std::size_t vx = dims[0] - 2 * half[0];
  const std::size_t vy = dims[1] - 2 * half[1];
  const std::size_t vz = dims[2] - 2 * half[2];
  const std::size_t n_valid = vx * vy * vz;

  std::vector<double> local(n_valid);
  parallel_for(n_valid, [&](std::size_t begin, std::size_t end) {
    for (std::size_t pos = begin; pos < end; ++pos) {
      int i = static_cast<int>(pos % vx) + half[0];
      int j = static_cast<int>((pos / vx) % vy) + half[1];
      int k = static_cast<int>(pos / (vx * vy)) + half[2];
      double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
      std::size_t w_idx = 0;
      for (int dk = -half[2]; dk <= half[2]; ++dk)
        for (int dj = -half[1]; dj <= half[1]; ++dj)
          for (int di = -half[0]; di <= half[0]; ++di, ++w_idx) {
            double w = weight[w_idx];
            double va = a.at(i + di, j + dj, k + dk);
            double vb = b.at(i + di, j + dj, k + dk);
            ma += w * va;
            mb += w * vb;
            aa += w * va * va;
            bb += w * vb * vb;
            ab += w * va * vb;
          }
      double var_a = aa - ma * ma;
      double var_b = bb - mb * mb;
      double cov = ab - ma * mb;
      local[pos] = ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                   ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
    }
  });

  double total = 0.0;
  for (double s : local) total += s;
  return total / static_cast<double>(n_valid);
}

}  // namespace

MetricsReport metrics(const VoxelGrid& test, const VoxelGrid& reference) {
  require(test.components() == 1 && reference.components() == 1,
          "metrics expects scalar images");
  require(test.dims() == reference.dims(), "metrics needs images of identical shape");
  require(!test.data().empty(), "metrics needs nonempty images");

  MetricsReport r;
  double sq = 0.0;
  for (std::size_t i = 0; i < test.data().size(); ++i) {
    double d = test.data()[i] - reference.data()[i];
    sq += d * d;
  }
  r.mse = sq / static_cast<double>(test.data().size());
  r.psnr = r.mse > 0.0 ? 10.0 * std::log10(1.0 / r.mse)
                       : std::numeric_limits<double>::infinity();
  r.ssim = mean_ssim(test, reference);
  return r;
}

namespace {

std::string format_psnr(double psnr, bool json) {
  if (std::isinf(psnr)) return json ? "\"inf\"" : "inf";
  std::ostringstream os;
  os << std::setprecision(17) << psnr;
  return os.str();
}

}  // namespace

std::string metrics_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.mse << ',' << format_psnr(r.psnr, false) << ',' << r.ssim
     << '\n';
  return os.str();
}

std::string metrics_json(const MetricsReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "{\"mse\": " << r.mse << ", \"psnr\": " << format_psnr(r.psnr, true)
     << ", \"ssim\": " << r.ssim << "}\n";
  return os.str();
}

}  // namespace fqf::post
