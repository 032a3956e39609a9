#include "fqf/hemo/flow_field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fqf/core/error.hpp"

namespace fqf::hemo {

namespace {

std::string vec_str(const Vec3& v) {
  std::ostringstream os;
  os.precision(17);
  os << v.x << ' ' << v.y << ' ' << v.z;
  return os.str();
}

Vec3 parse_vec(const std::string& s) {
  std::istringstream is(s);
  Vec3 v;
  is >> v.x >> v.y >> v.z;
  require(!is.fail(), "bad 3-vector header value '", s, "'");
  return v;
}

Vec3 clamp_to_box(const VoxelGrid& g, const Vec3& p) {
  Vec3 lo = g.min_corner(), hi = g.max_corner();
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y), std::clamp(p.z, lo.z, hi.z)};
}

}  // namespace

void validate_flow_field(const FlowField& field) {
  require(field.velocity.components() == 3, "velocity grid must have 3 components");
  require(field.mask.components() == 1, "mask grid must have 1 component");
  require(field.velocity.dims() == field.mask.dims(), "velocity/mask dims differ");
  require(norm(field.velocity.spacing() - field.mask.spacing()) == 0.0,
          "velocity/mask spacing differs");
  require(norm(field.velocity.origin() - field.mask.origin()) == 0.0,
          "velocity/mask origin differs");
  require(std::abs(norm(field.inlet.normal) - 1.0) < 1e-9, "inlet normal must be unit length");
  require(field.inlet.radius > 0.0, "inlet radius must be positive");
  require(field.fluid.density > 0.0 && field.fluid.kinematic_viscosity > 0.0,
          "fluid parameters must be positive");

  const auto& dims = field.mask.dims();
  std::size_t masked = 0;
  bool inlet_touches = false;
  double plane_tol = std::max({field.mask.spacing().x, field.mask.spacing().y,
                               field.mask.spacing().z});
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        double m = field.mask.at(i, j, k);
        require(m == 0.0 || m == 1.0, "mask must be binary");
        Vec3 v = field.velocity.vec_at(i, j, k);
        if (m == 0.0) {
          require(v.x == 0.0 && v.y == 0.0 && v.z == 0.0,
                  "velocity must vanish outside the mask");
        } else {
          ++masked;
          Vec3 p = field.mask.node_position(i, j, k);
          Vec3 d = p - field.inlet.point;
          double axial = dot(d, field.inlet.normal);
          if (std::abs(axial) <= plane_tol && norm(d - field.inlet.normal * axial) <=
                                                  field.inlet.radius + plane_tol)
            inlet_touches = true;
        }
      }
  require(masked > 0, "mask is empty");
  require(inlet_touches, "inlet plane does not intersect the mask");
}

FlowField poiseuille_field(const Tube& tube, double v_max, std::array<int, 3> dims, Vec3 spacing,
                           Vec3 origin, Fluid fluid) {
  require(tube.radius > 0.0, "tube radius must be positive");
  require(v_max > 0.0, "peak velocity must be positive");

  FlowField field;
  field.velocity = VoxelGrid(dims, spacing, origin, 3);
  field.mask = VoxelGrid(dims, spacing, origin, 1);
  field.fluid = fluid;

  Vec3 axis = normalized(tube.end - tube.start);
  double len = norm(tube.end - tube.start);
  require(len > 0.0, "tube has zero length");
  field.inlet = {tube.start, axis, tube.radius};

  Vec3 lo = field.mask.min_corner(), hi = field.mask.max_corner();
  for (const Vec3& p : {tube.start, tube.end}) {
    require(p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
                p.z <= hi.z,
            "grid does not contain the tube");
  }

  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        Vec3 p = field.mask.node_position(i, j, k);
        double s = dot(p - tube.start, axis);
        if (s < 0.0 || s > len) continue;
        Vec3 radial = p - tube.start - axis * s;
        double r2 = dot(radial, radial);
        double rr = tube.radius * tube.radius;
        if (r2 > rr) continue;
        field.mask.at(i, j, k) = 1.0;
        field.velocity.set_vec(i, j, k, axis * (v_max * (1.0 - r2 / rr)));
      }
  validate_flow_field(field);
  return field;
}

void write_flow_field(const std::string& path, const FlowField& field) {
  const auto& dims = field.velocity.dims();
  std::size_t n = field.velocity.num_nodes();
  std::vector<double> payload;
  payload.reserve(4 * n);
  payload.insert(payload.end(), field.velocity.data().begin(), field.velocity.data().end());
  payload.insert(payload.end(), field.mask.data().begin(), field.mask.data().end());

  ContainerHeader h;
  h.emplace_back("kind", "flow");
  h.emplace_back("dims", detail::concat(dims[0], ' ', dims[1], ' ', dims[2]));
  h.emplace_back("spacing", vec_str(field.velocity.spacing()));
  h.emplace_back("origin", vec_str(field.velocity.origin()));
  h.emplace_back("inlet_point", vec_str(field.inlet.point));
  h.emplace_back("inlet_normal", vec_str(field.inlet.normal));
  h.emplace_back("inlet_radius", detail::concat(field.inlet.radius));
  h.emplace_back("density", detail::concat(field.fluid.density));
  h.emplace_back("kinematic_viscosity", detail::concat(field.fluid.kinematic_viscosity));
  write_container(path, h, make_payload(std::span<const double>(payload)));
}

ImportReport import_flow(const std::string& path) {
  auto [header, payload] = read_container(path);
  require(find_header(header, "kind") && header_value(header, "kind") == "flow", path,
          ": not a flow container");
  require(find_header(header, "inlet_point") && find_header(header, "inlet_normal") &&
              find_header(header, "inlet_radius"),
          path, ": missing inlet descriptor");

  std::array<int, 3> dims{};
  {
    std::istringstream is(header_value(header, "dims"));
    is >> dims[0] >> dims[1] >> dims[2];
    require(!is.fail(), path, ": bad dims header");
  }
  Vec3 spacing = parse_vec(header_value(header, "spacing"));
  Vec3 origin = parse_vec(header_value(header, "origin"));

  ImportReport report;
  FlowField& f = report.field;
  f.velocity = VoxelGrid(dims, spacing, origin, 3);
  f.mask = VoxelGrid(dims, spacing, origin, 1);
  f.inlet.point = parse_vec(header_value(header, "inlet_point"));
  f.inlet.normal = parse_vec(header_value(header, "inlet_normal"));
  f.inlet.radius = std::stod(header_value(header, "inlet_radius"));
  if (const std::string* v = find_header(header, "density")) f.fluid.density = std::stod(*v);
  if (const std::string* v = find_header(header, "kinematic_viscosity"))
    f.fluid.kinematic_viscosity = std::stod(*v);

  std::vector<double> values = as_real_f64(payload);
  std::size_t n = f.mask.num_nodes();
  require(values.size() == 4 * n, path, ": payload does not hold 3+1 components per node (",
          values.size(), " values for ", n, " nodes)");
  std::copy(values.begin(), values.begin() + 3 * n, f.velocity.data().begin());
  std::copy(values.begin() + 3 * n, values.end(), f.mask.data().begin());

  for (std::size_t i = 0; i < n; ++i) {
    if (f.mask.data()[i] != 0.0) continue;
    double* v = f.velocity.data().data() + 3 * i;
    if (v[0] != 0.0 || v[1] != 0.0 || v[2] != 0.0) {
      v[0] = v[1] = v[2] = 0.0;
      ++report.zeroed_velocity_nodes;
    }
  }
  validate_flow_field(f);
  return report;
}

Vec3 sample_velocity(const FlowField& field, const Vec3& p) {
  require(field.velocity.contains(p), "velocity query outside the grid");
  return field.velocity.sample_vec(p);
}

Vec3 sample_velocity_clamped(const FlowField& field, const Vec3& p) {
  return field.velocity.sample_vec(clamp_to_box(field.velocity, p));
}

double sample_mask_clamped(const FlowField& field, const Vec3& p) {
  if (!field.mask.contains(p)) return 0.0;
  return field.mask.sample(p);
}

}  // namespace fqf::hemo
