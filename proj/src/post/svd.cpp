#include "fqf/post/svd.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>

#include "fqf/core/error.hpp"

namespace fqf::post {

namespace {

void check_ensemble(const std::vector<beamform::IqVolume>& ensemble) {
  require(!ensemble.empty(), "svd_filter needs a nonempty ensemble");
  const auto& first = ensemble.front();
  std::size_t n = first.grid.num_points();
  require(n > 0, "svd_filter needs a nonempty grid");
  for (const auto& frame : ensemble) {
    require(frame.grid.dims == first.grid.dims, "ensemble frames must share one grid");
    require(frame.values.size() == n, "frame value count must match the grid");
  }
  require(ensemble.size() >= 2, "svd_filter needs at least two frames");
  require(ensemble.size() <= n, "svd_filter needs at least as many voxels as frames");
}

}  // namespace

std::vector<beamform::IqVolume> svd_filter(const std::vector<beamform::IqVolume>& ensemble,
                                           int keep_lo, int keep_hi, SvdReport* report) {
  check_ensemble(ensemble);
  const int frames = static_cast<int>(ensemble.size());
  const std::size_t n = ensemble.front().grid.num_points();
  require(keep_lo >= 1 && keep_lo <= keep_hi && keep_hi <= frames,
          "retained band must satisfy 1 <= lo <= hi <= frames, got [", keep_lo, ", ", keep_hi,
          "] with ", frames, " frames");

  Eigen::MatrixXcd casorati(static_cast<Eigen::Index>(n), frames);
  for (int f = 0; f < frames; ++f)
    for (std::size_t v = 0; v < n; ++v)
      casorati(static_cast<Eigen::Index>(v), f) = ensemble[f].values[v];
  require(casorati.squaredNorm() > 0.0, "svd_filter needs a nonzero ensemble");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(casorati, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const auto& u = svd.matrixU();
  const auto& v = svd.matrixV();

  if (report) {
    report->n_modes = frames;
    report->keep_lo = keep_lo;
    report->keep_hi = keep_hi;
    report->singular_values.assign(sigma.data(), sigma.data() + frames);

    // Pearson correlation of the spatial modes' magnitudes.  A mode with
    // constant magnitude has no variance to correlate; its off-diagonal
    // entries are reported as zero.
    Eigen::MatrixXd mags = u.cwiseAbs();
    Eigen::VectorXd mean = mags.colwise().mean();
    Eigen::MatrixXd centered = mags.rowwise() - mean.transpose();
    Eigen::VectorXd sd = (centered.colwise().squaredNorm() / static_cast<double>(n))
                             .cwiseSqrt()
                             .transpose();
    report->mode_correlation.assign(static_cast<std::size_t>(frames) * frames, 0.0);
    for (int i = 0; i < frames; ++i) {
      report->mode_correlation[static_cast<std::size_t>(i) * frames + i] = 1.0;
      for (int j = i + 1; j < frames; ++j) {
        double denom = sd(i) * sd(j);
        double r = 0.0;
        if (denom > 0.0)
          r = centered.col(i).dot(centered.col(j)) / (static_cast<double>(n) * denom);
        report->mode_correlation[static_cast<std::size_t>(i) * frames + j] = r;
        report->mode_correlation[static_cast<std::size_t>(j) * frames + i] = r;
      }
    }
  }

  const int band = keep_hi - keep_lo + 1;
  Eigen::MatrixXcd rebuilt = u.middleCols(keep_lo - 1, band) *
                             sigma.segment(keep_lo - 1, band).asDiagonal() *
                             v.middleCols(keep_lo - 1, band).adjoint();

  std::vector<beamform::IqVolume> out(ensemble.size());
  for (int f = 0; f < frames; ++f) {
    out[f].grid = ensemble[f].grid;
    out[f].frame_index = ensemble[f].frame_index;
    out[f].n_angles = ensemble[f].n_angles;
    out[f].values.resize(n);
    for (std::size_t vi = 0; vi < n; ++vi)
      out[f].values[vi] = rebuilt(static_cast<Eigen::Index>(vi), f);
  }
  return out;
}

}  // namespace fqf::post
