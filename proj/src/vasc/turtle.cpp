#include "fqf/vasc/turtle.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "fqf/core/error.hpp"

namespace fqf::vasc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Mat3 frame_for_heading(const Vec3& heading) {
  Vec3 h = normalized(heading);
  require(norm(h) > 0.0, "start heading must be non-zero");
  Vec3 up_guess = std::abs(h.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  Vec3 right = normalized(cross(up_guess, h));
  Vec3 up = cross(h, right);
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    m(r, 0) = right[r];
    m(r, 1) = up[r];
    m(r, 2) = h[r];
  }
  return m;
}

struct TurtleState {
  Pose3 pose;
  int depth = 0;
  int last_segment = -1;
};

}  // namespace

VesselTree interpret(const std::string& turtle_string, const TurtleParams& params,
                     CounterRng& rng) {
  require(params.step_length > 0.0, "step length must be positive");
  require(params.root_diameter > 0.0, "root diameter must be positive");
  require(params.root_diameter >= params.min_diameter, "root diameter below the floor");
  require(params.angle_min_deg > 0.0 && params.angle_max_deg >= params.angle_min_deg,
          "angle range must satisfy 0 < min <= max");
  require(params.split_low > 0.0 && params.split_high >= params.split_low,
          "split weight range must satisfy 0 < low <= high");
  require(params.murray_exponent > 0.0, "radius power-law exponent must be positive");

  VesselTree tree;
  tree.murray_exponent = params.murray_exponent;
  tree.angle_min_deg = params.angle_min_deg;
  tree.angle_max_deg = params.angle_max_deg;

  auto draw_angle = [&] {
    return rng.uniform(params.angle_min_deg, params.angle_max_deg) * kDegToRad;
  };

  TurtleState cur;
  cur.pose.position = params.start_position;
  cur.pose.orientation = frame_for_heading(params.start_heading);
  std::vector<TurtleState> stack;

  for (char c : turtle_string) {
    switch (c) {
      case 'F': {
        VesselSegment seg;
        seg.start = cur.pose.position;
        cur.pose.advance(params.step_length * std::pow(params.step_decay, cur.depth));
        seg.end = cur.pose.position;
        seg.parent = cur.last_segment;
        seg.depth = cur.depth;
        tree.segments.push_back(seg);
        cur.last_segment = static_cast<int>(tree.segments.size()) - 1;
        break;
      }
      case '+': cur.pose.yaw(draw_angle()); break;
      case '-': cur.pose.yaw(-draw_angle()); break;
      case '&': cur.pose.pitch(draw_angle()); break;
      case '^': cur.pose.pitch(-draw_angle()); break;
      case '\\': cur.pose.roll(draw_angle()); break;
      case '/': cur.pose.roll(-draw_angle()); break;
      case '[':
        stack.push_back(cur);
        ++cur.depth;
        break;
      case ']':
        require(!stack.empty(), "turtle string closes an unopened bracket");
        cur = stack.back();
        stack.pop_back();
        break;
      default: fail("turtle string contains foreign symbol '", std::string(1, c), "'");
    }
  }
  require(stack.empty(), "turtle string leaves brackets open");
  require(!tree.segments.empty(), "turtle string draws no segments");

  // Top-down diameter assignment.  Children always carry larger indices
  // than their parents, so one forward sweep over parents suffices.
  std::size_t n = tree.segments.size();
  std::vector<std::vector<int>> kids(n);
  for (std::size_t i = 0; i < n; ++i)
    if (tree.segments[i].parent >= 0) kids[tree.segments[i].parent].push_back(static_cast<int>(i));

  std::vector<bool> dropped(n, false);
  double inv_m = 1.0 / params.murray_exponent;

  for (std::size_t i = 0; i < n; ++i) {
    VesselSegment& s = tree.segments[i];
    if (s.parent < 0) {
      s.start_diameter = params.root_diameter;
      s.end_diameter = s.start_diameter * params.taper;
    }
    if (dropped[i]) {
      for (int c : kids[i]) dropped[c] = true;
      continue;
    }
    const auto& c = kids[i];
    if (c.empty()) continue;

    if (c.size() == 1) {
      VesselSegment& child = tree.segments[c[0]];
      child.start_diameter = s.end_diameter;
      if (child.start_diameter < params.min_diameter) dropped[c[0]] = true;
      child.end_diameter = child.start_diameter * params.taper;
      continue;
    }

    std::vector<double> w(c.size());
    for (double& x : w) x = rng.uniform(params.split_low, params.split_high);
    std::vector<bool> alive(c.size(), true);
    // Drop under-floor children and redistribute until the survivors hold.
    for (;;) {
      double total = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k)
        if (alive[k]) total += w[k];
      if (total == 0.0) break;
      bool changed = false;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (!alive[k]) continue;
        double d = s.end_diameter * std::pow(w[k] / total, inv_m);
        if (d < params.min_diameter) {
          alive[k] = false;
          changed = true;
        } else {
          tree.segments[c[k]].start_diameter = d;
        }
      }
      if (!changed) break;
    }
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (!alive[k]) {
        dropped[c[k]] = true;
      } else {
        VesselSegment& child = tree.segments[c[k]];
        child.end_diameter = child.start_diameter * params.taper;
      }
    }
  }

  // Anomaly tagging over surviving segments, in index order.
  for (std::size_t i = 0; i < n; ++i) {
    if (dropped[i]) continue;
    if (params.aneurysm_prob <= 0.0 && params.stenosis_prob <= 0.0) break;
    VesselSegment& s = tree.segments[i];
    double u = rng.uniform();
    if (u < params.aneurysm_prob) {
      s.anomaly = Anomaly::aneurysm;
      s.anomaly_scale = rng.uniform(params.aneurysm_scale_min, params.aneurysm_scale_max);
    } else if (u < params.aneurysm_prob + params.stenosis_prob) {
      s.anomaly = Anomaly::stenosis;
      s.anomaly_scale = rng.uniform(params.stenosis_scale_min, params.stenosis_scale_max);
    }
  }

  VesselTree out;
  out.murray_exponent = tree.murray_exponent;
  out.angle_min_deg = tree.angle_min_deg;
  out.angle_max_deg = tree.angle_max_deg;
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (dropped[i]) continue;
    VesselSegment s = tree.segments[i];
    if (s.parent >= 0) s.parent = remap[s.parent];
    remap[i] = static_cast<int>(out.segments.size());
    out.segments.push_back(s);
  }
  require(!out.segments.empty(), "diameter floor removed every segment");
  return out;
}

}  // namespace fqf::vasc
