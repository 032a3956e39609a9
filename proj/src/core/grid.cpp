#include "fqf/core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fqf/core/error.hpp"

namespace fqf {

namespace {

std::string join3(double a, double b, double c) {
  std::ostringstream os;
  os.precision(17);
  os << a << ' ' << b << ' ' << c;
  return os.str();
}

void split3(const std::string& s, double out[3]) {
  std::istringstream is(s);
  is >> out[0] >> out[1] >> out[2];
  require(!is.fail(), "bad 3-vector header value '", s, "'");
}

struct AxisSample {
  int lo;
  int hi;
  double frac;
};

AxisSample axis_sample(double u, int n) {
  if (n == 1) return {0, 0, 0.0};  // singleton axis: constant along it
  int lo = static_cast<int>(std::floor(u));
  lo = std::clamp(lo, 0, n - 2);
  return {lo, lo + 1, u - lo};
}

}  // namespace

VoxelGrid::VoxelGrid(std::array<int, 3> dims, Vec3 spacing, Vec3 origin, int components)
    : dims_(dims), spacing_(spacing), origin_(origin), components_(components) {
  require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, "grid dims must be positive");
  require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0, "grid spacing must be positive");
  require(components == 1 || components == 3, "grid supports 1 or 3 components");
  data_.assign(num_nodes() * components, 0.0);
}

std::size_t VoxelGrid::num_nodes() const {
  return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
}

bool VoxelGrid::contains(const Vec3& p) const {
  Vec3 u = to_grid(p);
  return u.x >= 0.0 && u.x <= dims_[0] - 1 && u.y >= 0.0 && u.y <= dims_[1] - 1 && u.z >= 0.0 &&
         u.z <= dims_[2] - 1;
}

double VoxelGrid::sample(const Vec3& p, int c) const {
  Vec3 u = to_grid(p);
  AxisSample xs = axis_sample(u.x, dims_[0]);
  AxisSample ys = axis_sample(u.y, dims_[1]);
  AxisSample zs = axis_sample(u.z, dims_[2]);
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        double w = (dx ? xs.frac : 1.0 - xs.frac) * (dy ? ys.frac : 1.0 - ys.frac) *
                   (dz ? zs.frac : 1.0 - zs.frac);
        acc += w * at(dx ? xs.hi : xs.lo, dy ? ys.hi : ys.lo, dz ? zs.hi : zs.lo, c);
      }
  return acc;
}

Vec3 VoxelGrid::sample_vec(const Vec3& p) const {
  return {sample(p, 0), sample(p, 1), sample(p, 2)};
}

void write_grid(const std::string& path, const VoxelGrid& grid, ContainerHeader extra,
                Dtype dtype) {
  ContainerHeader h;
  h.emplace_back("kind", "grid");
  h.emplace_back("dims", detail::concat(grid.dims()[0], ' ', grid.dims()[1], ' ', grid.dims()[2]));
  h.emplace_back("spacing", join3(grid.spacing().x, grid.spacing().y, grid.spacing().z));
  h.emplace_back("origin", join3(grid.origin().x, grid.origin().y, grid.origin().z));
  h.emplace_back("components", std::to_string(grid.components()));
  for (auto& kv : extra) h.push_back(std::move(kv));

  Payload p;
  if (dtype == Dtype::f64) {
    p = make_payload(std::span<const double>(grid.data()));
  } else if (dtype == Dtype::f32) {
    std::vector<float> narrow(grid.data().begin(), grid.data().end());
    p = make_payload(std::span<const float>(narrow));
  } else {
    fail("grids persist as f32 or f64");
  }
  write_container(path, h, p);
}

std::pair<VoxelGrid, ContainerHeader> read_grid(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(find_header(header, "kind") && header_value(header, "kind") == "grid", path,
          ": not a grid container");
  std::array<int, 3> dims{};
  {
    std::istringstream is(header_value(header, "dims"));
    is >> dims[0] >> dims[1] >> dims[2];
    require(!is.fail(), path, ": bad dims header");
  }
  double sp[3], org[3];
  split3(header_value(header, "spacing"), sp);
  split3(header_value(header, "origin"), org);
  int components = std::stoi(header_value(header, "components"));

  VoxelGrid grid(dims, {sp[0], sp[1], sp[2]}, {org[0], org[1], org[2]}, components);
  std::vector<double> values = as_real_f64(payload);
  require(values.size() == grid.data().size(), path, ": payload count does not match dims");
  grid.data() = std::move(values);
  return {std::move(grid), std::move(header)};
}

}  // namespace fqf
