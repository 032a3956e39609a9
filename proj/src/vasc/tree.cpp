#include "fqf/vasc/tree.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "fqf/core/error.hpp"

namespace fqf::vasc {

namespace {

bool finite_vec(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

double angle_deg(const Vec3& a, const Vec3& b) {
  double c = dot(normalized(a), normalized(b));
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

std::string anomaly_name(Anomaly a) {
  switch (a) {
    case Anomaly::none: return "none";
    case Anomaly::aneurysm: return "aneurysm";
    case Anomaly::stenosis: return "stenosis";
  }
  fail("corrupt anomaly tag");
}

Anomaly parse_anomaly(const std::string& s) {
  if (s == "none") return Anomaly::none;
  if (s == "aneurysm") return Anomaly::aneurysm;
  if (s == "stenosis") return Anomaly::stenosis;
  fail("unknown anomaly '", s, "'");
}

int VesselTree::root() const {
  for (std::size_t i = 0; i < segments.size(); ++i)
    if (segments[i].parent < 0) return static_cast<int>(i);
  fail("tree has no root segment");
}

Vec3 VesselTree::inlet_position() const { return segments[root()].start; }
Vec3 VesselTree::inlet_direction() const { return segments[root()].direction(); }
double VesselTree::inlet_diameter() const { return segments[root()].start_diameter; }

std::vector<std::vector<int>> VesselTree::children() const {
  std::vector<std::vector<int>> out(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    int p = segments[i].parent;
    if (p >= 0) out[p].push_back(static_cast<int>(i));
  }
  return out;
}

std::pair<double, double> murray_daughters(double parent_diameter, double phi, double exponent) {
  require(parent_diameter > 0.0, "parent diameter must be positive");
  require(phi > 0.0 && phi < 1.0, "split fraction must lie in (0,1)");
  double inv = 1.0 / exponent;
  return {parent_diameter * std::pow(phi, inv), parent_diameter * std::pow(1.0 - phi, inv)};
}

std::vector<std::string> validate_tree(const VesselTree& tree, const TreeTolerances& tol) {
  std::vector<std::string> bad;
  auto flag = [&](auto&&... parts) { bad.push_back(detail::concat(parts...)); };

  if (tree.segments.empty()) {
    flag("tree has no segments");
    return bad;
  }

  int roots = 0;
  for (std::size_t i = 0; i < tree.segments.size(); ++i) {
    const VesselSegment& s = tree.segments[i];
    if (!finite_vec(s.start) || !finite_vec(s.end) || !std::isfinite(s.start_diameter) ||
        !std::isfinite(s.end_diameter))
      flag("segment ", i, ": non-finite geometry");
    if (s.length() <= 0.0) flag("segment ", i, ": non-positive length");
    if (s.start_diameter <= 0.0 || s.end_diameter <= 0.0)
      flag("segment ", i, ": non-positive diameter");
    if (s.parent < 0) {
      ++roots;
    } else {
      if (s.parent >= static_cast<int>(tree.segments.size()) ||
          s.parent == static_cast<int>(i)) {
        flag("segment ", i, ": bad parent index ", s.parent);
        continue;
      }
      const VesselSegment& p = tree.segments[s.parent];
      if (norm(s.start - p.end) > tol.connect_tol)
        flag("segment ", i, ": detached from parent by ", norm(s.start - p.end), " m");
      if (s.start_diameter > p.end_diameter * (1.0 + tol.murray_rel_tol))
        flag("segment ", i, ": diameter grows across junction");
    }
  }
  if (roots == 0) flag("tree has no root");

  auto kids = tree.children();
  double m = tree.murray_exponent;
  for (std::size_t i = 0; i < tree.segments.size(); ++i) {
    const auto& c = kids[i];
    if (c.empty()) continue;
    const VesselSegment& p = tree.segments[i];

    if (c.size() >= 2) {
      double sum = 0.0;
      for (int ci : c) sum += std::pow(tree.segments[ci].start_diameter, m);
      double target = std::pow(p.end_diameter, m);
      if (std::abs(sum - target) > tol.murray_rel_tol * target)
        flag("node after segment ", i, ": radius power-law residual ",
             std::abs(sum - target) / target);
    } else {
      double d = tree.segments[c[0]].start_diameter;
      if (std::abs(d - p.end_diameter) > tol.murray_rel_tol * p.end_diameter)
        flag("node after segment ", i, ": single continuation changes diameter");
    }

    if (c.size() >= 2) {
      int straight = 0;
      for (int ci : c) {
        double a = angle_deg(p.direction(), tree.segments[ci].direction());
        if (a <= tol.collinear_tol_deg) {
          ++straight;
          continue;
        }
        if (a < tree.angle_min_deg - tol.angle_tol_deg || a > tree.angle_max_deg + tol.angle_tol_deg)
          flag("segment ", ci, ": branch angle ", a, " deg outside [", tree.angle_min_deg, ", ",
               tree.angle_max_deg, "]");
      }
      if (straight > 1) flag("node after segment ", i, ": ", straight, " straight continuations");
    }
  }
  return bad;
}

void write_tree_json(const std::string& path, const VesselTree& tree) {
  nlohmann::ordered_json j;
  j["murray_exponent"] = tree.murray_exponent;
  j["angle_range_deg"] = {tree.angle_min_deg, tree.angle_max_deg};
  auto& segs = j["segments"];
  segs = nlohmann::ordered_json::array();
  for (const VesselSegment& s : tree.segments) {
    nlohmann::ordered_json e;
    e["start"] = {s.start.x, s.start.y, s.start.z};
    e["end"] = {s.end.x, s.end.y, s.end.z};
    e["start_diameter"] = s.start_diameter;
    e["end_diameter"] = s.end_diameter;
    e["parent"] = s.parent;
    e["depth"] = s.depth;
    e["anomaly"] = anomaly_name(s.anomaly);
    e["anomaly_scale"] = s.anomaly_scale;
    segs.push_back(std::move(e));
  }
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot open '", path, "' for writing");
  f << j.dump(2) << '\n';
  require(f.good(), "write to '", path, "' failed");
}

VesselTree read_tree_json(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open '", path, "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    fail(path, ": invalid JSON: ", e.what());
  }
  VesselTree tree;
  try {
    tree.murray_exponent = j.at("murray_exponent").get<double>();
    tree.angle_min_deg = j.at("angle_range_deg").at(0).get<double>();
    tree.angle_max_deg = j.at("angle_range_deg").at(1).get<double>();
    for (const auto& e : j.at("segments")) {
      VesselSegment s;
      s.start = {e.at("start").at(0).get<double>(), e.at("start").at(1).get<double>(),
                 e.at("start").at(2).get<double>()};
      s.end = {e.at("end").at(0).get<double>(), e.at("end").at(1).get<double>(),
               e.at("end").at(2).get<double>()};
      s.start_diameter = e.at("start_diameter").get<double>();
      s.end_diameter = e.at("end_diameter").get<double>();
      s.parent = e.at("parent").get<int>();
      s.depth = e.value("depth", 0);
      s.anomaly = parse_anomaly(e.value("anomaly", "none"));
      s.anomaly_scale = e.value("anomaly_scale", 1.0);
      tree.segments.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(path, ": bad tree layout: ", e.what());
  }
  return tree;
}

}  // namespace fqf::vasc
