#pragma once

#include <vector>

#include "fqf/beamform/das.hpp"

namespace fqf::post {

// Thin-SVD report of an ensemble's Casorati matrix (voxels x frames).
struct SvdReport {
  std::vector<double> singular_values;   // descending, length = frame count
  std::vector<double> mode_correlation;  // row-major F x F, Pearson of |U| columns
  int n_modes = 0;
  int keep_lo = 0;  // retained band, 1-based inclusive
  int keep_hi = 0;
};

// Casorati SVD clutter filter: flatten each frame volume into a column, take
// the thin SVD, and rebuild every frame from the singular components
// keep_lo..keep_hi (1-based).  The report carries the singular spectrum and
// the Pearson correlation matrix of the left singular vectors' magnitudes
// (the spatial modes).  Requires 2 <= frames <= voxels and a nonzero ensemble.
std::vector<beamform::IqVolume> svd_filter(const std::vector<beamform::IqVolume>& ensemble,
                                           int keep_lo, int keep_hi,
                                           SvdReport* report = nullptr);

}  // namespace fqf::post
