#include "fqf/tissue/optical_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fqf/core/error.hpp"
#include "fqf/core/parallel.hpp"

namespace fqf::tissue {

namespace {

struct Frame {
  const VoxelGrid* g;
  int w, h;
  double px(int x, int y) const { return g->at(x, y, 0); }
  double bilinear(double x, double y) const {
    x = std::clamp(x, 0.0, w - 1.0);
    y = std::clamp(y, 0.0, h - 1.0);
    int x0 = std::min(static_cast<int>(x), w - 2);
    int y0 = std::min(static_cast<int>(y), h - 2);
    if (w == 1) x0 = 0;
    if (h == 1) y0 = 0;
    double fx = x - x0, fy = y - y0;
    int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
    return (1 - fx) * (1 - fy) * px(x0, y0) + fx * (1 - fy) * px(x1, y0) +
           (1 - fx) * fy * px(x0, y1) + fx * fy * px(x1, y1);
  }
};

// Central difference, one-sided at the frame edge.
double grad_x(const Frame& f, int x, int y) {
  if (x == 0) return f.px(1, y) - f.px(0, y);
  if (x == f.w - 1) return f.px(x, y) - f.px(x - 1, y);
  return 0.5 * (f.px(x + 1, y) - f.px(x - 1, y));
}

double grad_y(const Frame& f, int x, int y) {
  if (y == 0) return f.px(x, 1) - f.px(x, 0);
  if (y == f.h - 1) return f.px(x, y) - f.px(x, y - 1);
  return 0.5 * (f.px(x, y + 1) - f.px(x, y - 1));
}

FlowVector block_flow(const Frame& a, const Frame& b, int x0, int y0, int window) {
  // Structure matrix of the template block.
  double sxx = 0, sxy = 0, syy = 0;
  for (int y = y0; y < y0 + window; ++y)
    for (int x = x0; x < x0 + window; ++x) {
      double gx = grad_x(a, x, y), gy = grad_y(a, x, y);
      sxx += gx * gx;
      sxy += gx * gy;
      syy += gy * gy;
    }
  double trace = sxx + syy;
  double det = sxx * syy - sxy * sxy;
  if (det <= 1e-12 * trace * trace || trace <= 0.0) return {0.0, 0.0, false};

  // Integer search seeds the refinement; mean squared difference over the
  // in-bounds overlap, shifts with less than half a block of overlap skipped.
  int s_max = window / 2;
  int best_sx = 0, best_sy = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  int min_count = window * window / 2;
  for (int sy = -s_max; sy <= s_max; ++sy)
    for (int sx = -s_max; sx <= s_max; ++sx) {
      double cost = 0;
      int count = 0;
      for (int y = y0; y < y0 + window; ++y) {
        int yb = y + sy;
        if (yb < 0 || yb >= b.h) continue;
        for (int x = x0; x < x0 + window; ++x) {
          int xb = x + sx;
          if (xb < 0 || xb >= b.w) continue;
          double d = b.px(xb, yb) - a.px(x, y);
          cost += d * d;
          ++count;
        }
      }
      if (count < min_count) continue;
      cost /= count;
      bool better = cost < best_cost;
      if (!better && cost == best_cost) {
        int r2 = sx * sx + sy * sy, best_r2 = best_sx * best_sx + best_sy * best_sy;
        better = r2 < best_r2 || (r2 == best_r2 && (sy < best_sy || (sy == best_sy && sx < best_sx)));
      }
      if (better) {
        best_cost = cost;
        best_sx = sx;
        best_sy = sy;
      }
    }

  // Two least-squares refinements against the template gradients.  Pixels
  // warped outside the frame drop out of both sides of the normal equations
  // so edge blocks are not pulled off the true shift.
  double dx = best_sx, dy = best_sy;
  for (int iter = 0; iter < 2; ++iter) {
    double bx = 0, by = 0, gxx = 0, gxy = 0, gyy = 0;
    for (int y = y0; y < y0 + window; ++y)
      for (int x = x0; x < x0 + window; ++x) {
        double wx = x + dx, wy = y + dy;
        if (wx < 0.0 || wx > b.w - 1.0 || wy < 0.0 || wy > b.h - 1.0) continue;
        double r = b.bilinear(wx, wy) - a.px(x, y);
        double gx = grad_x(a, x, y), gy = grad_y(a, x, y);
        bx += gx * r;
        by += gy * r;
        gxx += gx * gx;
        gxy += gx * gy;
        gyy += gy * gy;
      }
    double d2 = gxx * gyy - gxy * gxy;
    if (d2 <= 1e-12 * (gxx + gyy) * (gxx + gyy)) break;
    dx += (-gyy * bx + gxy * by) / d2;
    dy += (gxy * bx - gxx * by) / d2;
  }
  return {dx, dy, true};
}

}  // namespace

FlowGrid optical_flow(const VoxelGrid& frame_a, const VoxelGrid& frame_b, int window,
                      int median_radius) {
  require(frame_a.dims() == frame_b.dims(), "optical flow frames must share dims");
  require(frame_a.components() == 1 && frame_b.components() == 1,
          "optical flow frames must be single channel");
  require(frame_a.dims()[2] == 1, "optical flow frames must be 2D (depth dim of 1)");
  require(window >= 2, "optical flow window must be at least 2 px");
  require(median_radius >= 0, "median radius must be nonnegative");

  Frame a{&frame_a, frame_a.dims()[0], frame_a.dims()[1]};
  Frame b{&frame_b, frame_b.dims()[0], frame_b.dims()[1]};

  FlowGrid out;
  out.window = window;
  out.blocks_x = a.w / window;
  out.blocks_y = a.h / window;
  require(out.blocks_x >= 1 && out.blocks_y >= 1, "frames smaller than one flow window");

  std::size_t n_blocks = static_cast<std::size_t>(out.blocks_x) * out.blocks_y;
  std::vector<FlowVector> raw(n_blocks);
  parallel_for(n_blocks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      int bx = static_cast<int>(i) % out.blocks_x;
      int by = static_cast<int>(i) / out.blocks_x;
      raw[i] = block_flow(a, b, bx * window, by * window, window);
    }
  });

  // Component-wise median over each block neighborhood; invalid vectors are
  // excluded from every median and take the fill value themselves.
  auto median_of = [](std::vector<double>& v) {
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
      double lo = *std::max_element(v.begin(), v.begin() + mid);
      return 0.5 * (lo + hi);
    }
    return hi;
  };

  out.vectors.assign(n_blocks, {});
  for (int by = 0; by < out.blocks_y; ++by)
    for (int bx = 0; bx < out.blocks_x; ++bx) {
      std::vector<double> xs, ys;
      for (int ny = std::max(0, by - median_radius);
           ny <= std::min(out.blocks_y - 1, by + median_radius); ++ny)
        for (int nx = std::max(0, bx - median_radius);
             nx <= std::min(out.blocks_x - 1, bx + median_radius); ++nx) {
          const FlowVector& v = raw[nx + static_cast<std::size_t>(out.blocks_x) * ny];
          if (!v.valid) continue;
          xs.push_back(v.x);
          ys.push_back(v.y);
        }
      FlowVector& dst = out.at(bx, by);
      dst.valid = raw[bx + static_cast<std::size_t>(out.blocks_x) * by].valid;
      if (!xs.empty()) {
        dst.x = median_of(xs);
        dst.y = median_of(ys);
      }
    }
  return out;
}

MotionModel lift_flow_to_motion(const FlowGrid& flow, double pixel_pitch, double frame_interval,
                                double scale) {
  require(flow.blocks_x >= 1 && flow.blocks_y >= 1, "flow grid is empty");
  require(pixel_pitch > 0.0, "pixel pitch must be positive");
  require(frame_interval > 0.0, "frame interval must be positive");

  double block_pitch = flow.window * pixel_pitch;
  double center = 0.5 * (flow.window - 1) * pixel_pitch;
  VoxelGrid plane({flow.blocks_x, 1, flow.blocks_y}, {block_pitch, 1.0, block_pitch},
                  {center, 0.0, center}, 3);
  for (int by = 0; by < flow.blocks_y; ++by)
    for (int bx = 0; bx < flow.blocks_x; ++bx) {
      const FlowVector& v = flow.at(bx, by);
      plane.set_vec(bx, 0, by,
                    {v.x * pixel_pitch / frame_interval, 0.0, v.y * pixel_pitch / frame_interval});
    }

  MotionModel m;
  m.kind = MotionModel::Kind::flow_derived;
  m.plane = std::move(plane);
  m.velocity_scale = scale;
  return m;
}

}  // namespace fqf::tissue
