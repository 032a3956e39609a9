#pragma once

#include <string>

#include "fqf/core/grid.hpp"

namespace fqf::post {

struct MetricsReport {
  double mse = 0.0;
  double psnr = 0.0;  // dB; +infinity when the images are identical
  double ssim = 0.0;
};

// Agreement between two same-shape images with values in [0,1]: mean squared
// error, peak signal-to-noise ratio with unit peak (10 log10(1/MSE)), and
// mean local SSIM with an 11x11 Gaussian window (sigma 1.5, K1 0.01,
// K2 0.03, L 1).  Axes shorter than 11 shrink the window to the largest odd
// size that fits; the mean runs over positions where the window lies fully
// inside the image.
MetricsReport metrics(const VoxelGrid& test, const VoxelGrid& reference);

std::string metrics_csv(const MetricsReport& r);   // one line: mse,psnr,ssim
std::string metrics_json(const MetricsReport& r);  // {"mse": .., "psnr": .., "ssim": ..}

}  // namespace fqf::post
