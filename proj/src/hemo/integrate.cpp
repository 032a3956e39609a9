#include "fqf/hemo/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "fqf/core/error.hpp"

namespace fqf::hemo {

Trajectory integrate_trajectory(const FlowField& field, const Vec3& p0, double duration,
                                const IntegrateOptions& opts) {
  require(duration >= 0.0, "duration must be non-negative");
  require(opts.rel_tol > 0.0 && opts.abs_tol > 0.0, "tolerances must be positive");
  require(sample_mask_clamped(field, p0) >= 0.5, "start point lies outside the vessel");

  const double sign = opts.backward ? -1.0 : 1.0;
  auto f = [&](const Vec3& p) { return sample_velocity_clamped(field, p) * sign; };

  Trajectory out;
  double t = 0.0;
  Vec3 p = p0;
  if (opts.record_path) out.path.push_back({0.0, p});

  double h = std::min(duration, std::max(opts.min_step, 1e-3 * duration));
  if (h <= 0.0) {
    out.end = p;
    out.end_time = 0.0;
    if (opts.record_path) out.path.push_back({0.0, p});
    return out;
  }

  Vec3 k1 = f(p);
  constexpr std::size_t kMaxSteps = 10'000'000;
  std::size_t steps = 0;

  while (t < duration) {
    require(++steps <= kMaxSteps, "step budget exhausted");
    if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
    bool final_step = duration - t <= h;
    double hs = std::min(h, duration - t);

    Vec3 k2 = f(p + k1 * (0.5 * hs));
    Vec3 k3 = f(p + k2 * (0.75 * hs));
    Vec3 p3 = p + (k1 * (2.0 / 9.0) + k2 * (1.0 / 3.0) + k3 * (4.0 / 9.0)) * hs;
    Vec3 k4 = f(p3);
    Vec3 p2 = p + (k1 * (7.0 / 24.0) + k2 * 0.25 + k3 * (1.0 / 3.0) + k4 * 0.125) * hs;

    double err = norm(p3 - p2);
    double tol = opts.abs_tol + opts.rel_tol * norm(p3);

    if (err <= tol) {
      t += hs;
      p = p3;
      k1 = k4;  // first-same-as-last
      if (opts.record_path) out.path.push_back({t, p});
      if (!field.mask.contains(p) || sample_mask_clamped(field, p) < 0.5) {
        out.exited = true;
        out.exit_time = t;
        break;
      }
      double factor = err > 0.0 ? 0.9 * std::cbrt(tol / err) : 5.0;
      h = hs * std::clamp(factor, 0.2, 5.0);
    } else {
      double factor = std::clamp(0.9 * std::cbrt(tol / err), 0.2, 0.9);
      h = hs * factor;
      require(h >= opts.min_step || final_step, "step size underflow below ", opts.min_step,
              " s");
      require(h > 0.0, "step size underflow");
    }
  }

  out.end = p;
  out.end_time = t;
  if (opts.record_path && (out.path.empty() || out.path.back().t != t))
    out.path.push_back({t, p});
  return out;
}

}  // namespace fqf::hemo
