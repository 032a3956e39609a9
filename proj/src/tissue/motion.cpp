#include "fqf/tissue/motion.hpp"

#include <algorithm>
#include <cmath>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::tissue {

namespace {

Vec3 clamped_sample_vec(const VoxelGrid& grid, Vec3 p) {
  Vec3 lo = grid.min_corner(), hi = grid.max_corner();
  p.x = std::clamp(p.x, lo.x, hi.x);
  p.y = std::clamp(p.y, lo.y, hi.y);
  p.z = std::clamp(p.z, lo.z, hi.z);
  return grid.sample_vec(p);
}

Vec3 field_velocity(const MotionModel& m, const Vec3& p, double t) {
  if (m.fields.size() == 1) return clamped_sample_vec(m.fields[0], p);
  t = std::clamp(t, m.times.front(), m.times.back());
  std::size_t hi = std::upper_bound(m.times.begin(), m.times.end(), t) - m.times.begin();
  hi = std::clamp<std::size_t>(hi, 1, m.times.size() - 1);
  std::size_t lo = hi - 1;
  double s = (t - m.times[lo]) / (m.times[hi] - m.times[lo]);
  Vec3 a = clamped_sample_vec(m.fields[lo], p);
  Vec3 b = clamped_sample_vec(m.fields[hi], p);
  return a * (1.0 - s) + b * s;
}

struct Boundary {
  bool active = false;
  BoundaryRule rule = BoundaryRule::freeze;
  Box box{};

  bool inside(const Vec3& p) const {
    return p.x >= box.lo.x && p.x <= box.hi.x && p.y >= box.lo.y && p.y <= box.hi.y &&
           p.z >= box.lo.z && p.z <= box.hi.z;
  }

  // Returns true when the point froze at the boundary.
  bool apply(Vec3& p) const {
    if (!active || inside(p)) return false;
    if (rule == BoundaryRule::freeze) {
      p.x = std::clamp(p.x, box.lo.x, box.hi.x);
      p.y = std::clamp(p.y, box.lo.y, box.hi.y);
      p.z = std::clamp(p.z, box.lo.z, box.hi.z);
      return true;
    }
    auto wrap1 = [](double v, double lo, double hi) {
      double e = hi - lo;
      if (e <= 0.0) return lo;
      double r = std::fmod(v - lo, e);
      if (r < 0.0) r += e;
      return lo + r;
    };
    p.x = wrap1(p.x, box.lo.x, box.hi.x);
    p.y = wrap1(p.y, box.lo.y, box.hi.y);
    p.z = wrap1(p.z, box.lo.z, box.hi.z);
    return false;
  }
};

Boundary effective_boundary(const MotionModel& m) {
  Boundary b;
  b.rule = m.boundary;
  if (m.has_region) {
    b.active = true;
    b.box = m.region;
  } else if (m.kind == MotionModel::Kind::field && !m.fields.empty()) {
    b.active = true;
    b.box = {m.fields[0].min_corner(), m.fields[0].max_corner()};
  }
  return b;
}

constexpr double kRelTol = 1e-6;
constexpr double kAbsTol = 1e-9;
constexpr double kMinStep = 1e-9;
constexpr std::size_t kMaxSteps = 10'000'000;

// Embedded RK2(3), third order propagated, first-same-as-last.
Vec3 integrate_point(const MotionModel& m, const Boundary& bound, Vec3 p, double t0, double dt) {
  double t = t0;
  const double t_end = t0 + dt;
  double h = std::min(dt, std::max(kMinStep, 1e-3 * dt));
  Vec3 k1 = velocity_at(m, p, t);
  for (std::size_t step = 0; step < kMaxSteps && t < t_end; ++step) {
    bool final_step = t + h >= t_end;
    if (final_step) h = t_end - t;
    Vec3 k2 = velocity_at(m, p + k1 * (0.5 * h), t + 0.5 * h);
    Vec3 k3 = velocity_at(m, p + k2 * (0.75 * h), t + 0.75 * h);
    Vec3 p3 = p + (k1 * (2.0 / 9.0) + k2 * (1.0 / 3.0) + k3 * (4.0 / 9.0)) * h;
    Vec3 k4 = velocity_at(m, p3, t + h);
    Vec3 p2 = p + (k1 * (7.0 / 24.0) + k2 * 0.25 + k3 * (1.0 / 3.0) + k4 * 0.125) * h;
    double err = norm(p3 - p2);
    double tol = kAbsTol + kRelTol * norm(p3);
    if (err <= tol) {
      p = p3;
      t += h;
      k1 = k4;
      if (bound.apply(p)) return p;  // froze at the region boundary
      double grow = err == 0.0 ? 5.0 : std::clamp(0.9 * std::cbrt(tol / err), 0.2, 5.0);
      h *= grow;
    } else {
      h *= std::clamp(0.9 * std::cbrt(tol / err), 0.2, 0.9);
      require(final_step || h >= kMinStep, "advection step size underflow at t=", t);
    }
  }
  return p;
}

}  // namespace

MotionModel constant_motion(const Vec3& velocity) {
  MotionModel m;
  m.kind = MotionModel::Kind::constant;
  m.velocity = velocity;
  return m;
}

MotionModel rotation_motion(const Vec3& center, const Vec3& axis, double angular_velocity) {
  MotionModel m;
  m.kind = MotionModel::Kind::rotation;
  m.center = center;
  m.axis = normalized(axis);
  m.angular_velocity = angular_velocity;
  return m;
}

MotionModel field_motion(std::vector<double> times, std::vector<VoxelGrid> fields) {
  MotionModel m;
  m.kind = MotionModel::Kind::field;
  m.times = std::move(times);
  m.fields = std::move(fields);
  validate_motion(m);
  return m;
}

void validate_motion(const MotionModel& m) {
  require(std::isfinite(m.velocity_scale), "motion velocity scale must be finite");
  switch (m.kind) {
    case MotionModel::Kind::constant:
      break;
    case MotionModel::Kind::rotation:
      require(std::abs(norm(m.axis) - 1.0) < 1e-9, "rotation axis must be unit length");
      break;
    case MotionModel::Kind::field: {
      require(!m.fields.empty(), "field motion needs at least one velocity grid");
      require(m.times.size() == m.fields.size(), "field motion needs one time per grid");
      for (std::size_t i = 1; i < m.times.size(); ++i)
        require(m.times[i] > m.times[i - 1], "field motion times must be strictly increasing");
      for (const auto& g : m.fields)
        require(g.components() == 3, "field motion grids must have 3 components");
      break;
    }
    case MotionModel::Kind::flow_derived:
      require(m.plane.components() == 3, "flow motion plane must have 3 components");
      require(m.plane.dims()[1] == 1, "flow motion plane must be one node thick in elevation");
      break;
  }
}

Vec3 velocity_at(const MotionModel& m, const Vec3& p, double t) {
  switch (m.kind) {
    case MotionModel::Kind::constant:
      return m.velocity * m.velocity_scale;
    case MotionModel::Kind::rotation:
      return cross(m.axis, p - m.center) * (m.angular_velocity * m.velocity_scale);
    case MotionModel::Kind::field:
      return field_velocity(m, p, t) * m.velocity_scale;
    case MotionModel::Kind::flow_derived:
      return clamped_sample_vec(m.plane, p) * m.velocity_scale;
  }
  fail("unknown motion kind");
}

ScattererCloud advect(const ScattererCloud& cloud, const MotionModel& model, double t0,
                      double dt) {
  require(dt > 0.0, "advection duration must be positive");
  require(cloud.reflectivity.size() == cloud.size() && cloud.label.size() == cloud.size(),
          "scatterer cloud field lengths differ");
  validate_motion(model);

  ScattererCloud out = cloud;
  Boundary bound = effective_boundary(model);

  switch (model.kind) {
    case MotionModel::Kind::constant: {
      Vec3 d = model.velocity * model.velocity_scale * dt;
      for (Vec3& p : out.positions) {
        p = p + d;
        bound.apply(p);
      }
      break;
    }
    case MotionModel::Kind::rotation: {
      Mat3 rot = rotation_about(model.axis, model.angular_velocity * model.velocity_scale * dt);
      for (Vec3& p : out.positions) {
        p = model.center + rot * (p - model.center);
        bound.apply(p);
      }
      break;
    }
    case MotionModel::Kind::field:
    case MotionModel::Kind::flow_derived: {
      parallel_for(out.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
          out.positions[i] = integrate_point(model, bound, out.positions[i], t0, dt);
      });
      break;
    }
  }
  return out;
}

}  // namespace fqf::tissue
