#include "fqf/hemo/inlet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fqf/core/error.hpp"
#include "fqf/hemo/integrate.hpp"

namespace fqf::hemo {

namespace {

void plane_basis(const Vec3& normal, Vec3& e1, Vec3& e2) {
  Vec3 n = normalized(normal);
  Vec3 guess = std::abs(n.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  e1 = normalized(cross(guess, n));
  e2 = cross(n, e1);
}

}  // namespace

InletDensity inlet_density(const FlowField& field, int n_samples) {
  require(n_samples > 0, "sample count must be positive");
  InletDensity out;
  out.plane = field.inlet;

  Vec3 e1, e2;
  plane_basis(out.plane.normal, e1, e2);
  double r = out.plane.radius;

  // m^2 lattice cells over the bounding square keep ~n_samples inside the disk.
  int m = static_cast<int>(std::ceil(std::sqrt(4.0 * n_samples / std::numbers::pi)));
  out.lattice_pitch = 2.0 * r / m;

  double total = 0.0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double u = (a + 0.5) / m * 2.0 - 1.0;
      double v = (b + 0.5) / m * 2.0 - 1.0;
      if (u * u + v * v > 1.0) continue;
      Vec3 p = out.plane.point + e1 * (u * r) + e2 * (v * r);
      double flux = std::max(0.0, dot(sample_velocity_clamped(field, p), out.plane.normal));
      out.points.push_back(p);
      out.weights.push_back(flux);
      total += flux;
    }
  require(total > 0.0, "zero flux through the inlet plane");
  for (double& w : out.weights) w /= total;
  return out;
}

Vec3 sample_inlet_point(const InletDensity& density, CounterRng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  std::size_t idx = density.points.size() - 1;
  for (std::size_t i = 0; i < density.weights.size(); ++i) {
    acc += density.weights[i];
    if (u < acc) {
      idx = i;
      break;
    }
  }
  Vec3 e1, e2;
  plane_basis(density.plane.normal, e1, e2);
  double ju = (rng.uniform() - 0.5) * density.lattice_pitch;
  double jv = (rng.uniform() - 0.5) * density.lattice_pitch;
  Vec3 p = density.points[idx] + e1 * ju + e2 * jv;

  Vec3 d = p - density.plane.point;
  double radial = norm(d - density.plane.normal * dot(d, density.plane.normal));
  if (radial > density.plane.radius) {
    double s = density.plane.radius / radial * 0.999;
    p = density.plane.point + (d - density.plane.normal * dot(d, density.plane.normal)) * s +
        density.plane.normal * dot(d, density.plane.normal);
  }
  return p;
}

BackpropResult backpropagate_inlet(const FlowField& field, std::span<const Vec3> seeds,
                                   double max_time) {
  BackpropResult out;
  IntegrateOptions opts;
  opts.backward = true;
  opts.record_path = true;

  const Vec3 n = field.inlet.normal;
  const Vec3 q = field.inlet.point;

  for (const Vec3& seed : seeds) {
    if (sample_mask_clamped(field, seed) < 0.5) {
      ++out.dropped;
      continue;
    }
    Trajectory traj;
    try {
      traj = integrate_trajectory(field, seed, max_time, opts);
    } catch (const Error&) {
      ++out.dropped;  // stalled against a wall; counts as non-crossing
      continue;
    }
    bool crossed = false;
    for (std::size_t i = 1; i < traj.path.size(); ++i) {
      double s0 = dot(traj.path[i - 1].p - q, n);
      double s1 = dot(traj.path[i].p - q, n);
      if (s0 > 0.0 && s1 <= 0.0) {
        double f = s0 / (s0 - s1);
        out.points.push_back(traj.path[i - 1].p + (traj.path[i].p - traj.path[i - 1].p) * f);
        crossed = true;
        break;
      }
    }
    if (!crossed) ++out.dropped;
  }
  return out;
}

std::vector<Vec3> filter_inlet_points(std::span<const Vec3> points, const InletPlane& plane,
                                      double distance_tol) {
  std::vector<Vec3> kept;
  for (const Vec3& p : points) {
    Vec3 d = p - plane.point;
    double axial = dot(d, plane.normal);
    if (std::abs(axial) > distance_tol) continue;
    if (norm(d - plane.normal * axial) > plane.radius) continue;
    kept.push_back(p);
  }
  return kept;
}

}  // namespace fqf::hemo
