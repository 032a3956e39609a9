#include "fqf/pipeline/config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "fqf/rf/simulate.hpp"
#include "fqf/tissue/cloud.hpp"

namespace fqf::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

// Strict object reader: every typed getter marks its key, and finish()
// rejects keys nothing consumed, so misspelled fields fail loudly instead of
// silently falling back to defaults.  Error messages carry the dotted path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) bad_field(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_->contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_->contains(key)) bad_field(where(key), "missing required field");
    return j_->at(key);
  }

  Section object(const std::string& key) { return Section(raw(key), where(key)); }

  double num(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) bad_field(where(key), "expected a number");
    return v.get<double>();
  }
  double num_or(const std::string& key, double dflt) { return has(key) ? num(key) : dflt; }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
      bad_field(where(key), "expected an integer");
    return v.get<int>();
  }
  int integer_or(const std::string& key, int dflt) { return has(key) ? integer(key) : dflt; }

  std::uint64_t u64(const std::string& key) {
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      auto i = v.get<std::int64_t>();
      if (i < 0) bad_field(where(key), "expected a non-negative integer");
      return static_cast<std::uint64_t>(i);
    }
    if (v.is_number_float()) {
      double d = v.get<double>();
      if (d < 0.0 || d != std::floor(d) || d > 1.8e19)
        bad_field(where(key), "expected a non-negative integer");
      return static_cast<std::uint64_t>(d);
    }
    bad_field(where(key), "expected a non-negative integer");
  }
  std::uint64_t u64_or(const std::string& key, std::uint64_t dflt) {
    return has(key) ? u64(key) : dflt;
  }

  std::string str(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) bad_field(where(key), "expected a string");
    return v.get<std::string>();
  }
  std::string str_or(const std::string& key, const std::string& dflt) {
    return has(key) ? str(key) : dflt;
  }

  bool boolean_or(const std::string& key, bool dflt) {
    if (!has(key)) return dflt;
    const json& v = raw(key);
    if (!v.is_boolean()) bad_field(where(key), "expected a boolean");
    return v.get<bool>();
  }

  Vec3 vec3(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
        !v[2].is_number())
      bad_field(where(key), "expected an array of three numbers");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }
  Vec3 vec3_or(const std::string& key, const Vec3& dflt) { return has(key) ? vec3(key) : dflt; }

  std::array<int, 3> dims3(const std::string& key) {
    const json& v = raw(key);
    bool ok = v.is_array() && v.size() == 3;
    std::array<int, 3> d{0, 0, 0};
    for (int i = 0; ok && i < 3; ++i) {
      ok = v[i].is_number_integer() || v[i].is_number_unsigned();
      if (ok) d[i] = v[i].get<int>();
      ok = ok && d[i] >= 1;
    }
    if (!ok) bad_field(where(key), "expected an array of three positive integers");
    return d;
  }

  std::vector<double> num_array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) bad_field(where(key), "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
      if (!e.is_number()) bad_field(where(key), "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) bad_field(where(it.key()), "unknown field");
    }
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

void check_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) bad_field(field, "must be a positive finite number");
}

void check_positive_vec(const Vec3& v, const std::string& field) {
  if (!(v.x > 0.0 && v.y > 0.0 && v.z > 0.0))
    bad_field(field, "every component must be positive");
}

FlowGrid parse_grid_section(Section& parent, const std::string& key) {
  Section g = parent.object(key);
  FlowGrid out;
  out.dims = g.dims3("dims");
  out.spacing = g.vec3("spacing");
  out.origin = g.vec3("origin");
  g.finish();
  check_positive_vec(out.spacing, parent.where(key) + ".spacing");
  return out;
}

template <typename T>
std::string fmt(T v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }

  RunConfig cfg;
  cfg.config_dir = fs::path(path).parent_path().string();
  if (cfg.config_dir.empty()) cfg.config_dir = ".";

  Section root(j, "");
  cfg.seed = root.u64("seed");
  cfg.output_dir = root.str("output_dir");
  if (cfg.output_dir.empty()) bad_field("output_dir", "must not be empty");

  {
    Section td = root.object("transducer");
    cfg.transducer_preset = td.str("preset");
    if (cfg.transducer_preset.empty()) bad_field("transducer.preset", "must not be empty");
    td.finish();
  }

  {
    Section vs = root.object("vessel");
    cfg.vessel.kind = vs.str("kind");
    if (cfg.vessel.kind == "tube") {
      cfg.vessel.start = vs.vec3("start");
      cfg.vessel.end = vs.vec3("end");
      cfg.vessel.radius = vs.num("radius");
      check_positive(cfg.vessel.radius, "vessel.radius");
      if (!(norm(cfg.vessel.end - cfg.vessel.start) > 0.0))
        bad_field("vessel.end", "tube endpoints must be distinct");
    } else if (cfg.vessel.kind == "lsystem") {
      cfg.vessel.iterations = vs.integer("iterations");
      if (cfg.vessel.iterations < 1) bad_field("vessel.iterations", "must be at least 1");
      cfg.vessel.step_length = vs.num_or("step_length", cfg.vessel.step_length);
      cfg.vessel.root_diameter = vs.num_or("root_diameter", cfg.vessel.root_diameter);
      check_positive(cfg.vessel.step_length, "vessel.step_length");
      check_positive(cfg.vessel.root_diameter, "vessel.root_diameter");
    } else {
      bad_field("vessel.kind", "must be \"tube\" or \"lsystem\"");
    }
    vs.finish();
  }

  {
    Section fl = root.object("flow");
    cfg.flow.source = fl.str("source");
    if (cfg.flow.source == "poiseuille") {
      cfg.flow.v_max = fl.num("v_max");
      check_positive(cfg.flow.v_max, "flow.v_max");
      cfg.flow.grid = parse_grid_section(fl, "grid");
    } else if (cfg.flow.source == "file") {
      cfg.flow.path = fl.str("path");
      if (cfg.flow.path.empty()) bad_field("flow.path", "must not be empty");
    } else {
      bad_field("flow.source", "must be \"poiseuille\" or \"file\"");
    }
    fl.finish();
  }

  {
    Section pt = root.object("particles");
    cfg.particles.count = pt.integer("count");
    cfg.particles.n_frames = pt.integer("n_frames");
    cfg.particles.frame_rate = pt.num("frame_rate");
    cfg.particles.rel_tol = pt.num_or("rel_tol", cfg.particles.rel_tol);
    cfg.particles.inlet_samples = pt.integer_or("inlet_samples", cfg.particles.inlet_samples);
    pt.finish();
    if (cfg.particles.count < 1) bad_field("particles.count", "must be at least 1");
    if (cfg.particles.n_frames < 1) bad_field("particles.n_frames", "must be at least 1");
    check_positive(cfg.particles.frame_rate, "particles.frame_rate");
    check_positive(cfg.particles.rel_tol, "particles.rel_tol");
    if (cfg.particles.inlet_samples < 1) bad_field("particles.inlet_samples", "must be at least 1");
  }

  {
    Section ts = root.object("tissue");
    cfg.tissue.density_per_lambda2 = ts.num("density_per_lambda2");
    check_positive(cfg.tissue.density_per_lambda2, "tissue.density_per_lambda2");
    {
      Section rg = ts.object("region");
      cfg.tissue.region.lo = rg.vec3("lo");
      cfg.tissue.region.hi = rg.vec3("hi");
      rg.finish();
      Vec3 d = cfg.tissue.region.hi - cfg.tissue.region.lo;
      if (!(d.x > 0.0 && d.y > 0.0 && d.z > 0.0))
        bad_field("tissue.region", "hi must exceed lo on every axis");
    }
    cfg.tissue.blood_contrast_db = ts.num_or("blood_contrast_db", cfg.tissue.blood_contrast_db);
    cfg.tissue.reflectivity = ts.str_or("reflectivity", cfg.tissue.reflectivity);
    if (cfg.tissue.reflectivity != "gaussian" && cfg.tissue.reflectivity != "uniform")
      bad_field("tissue.reflectivity", "must be \"gaussian\" or \"uniform\"");
    if (ts.has("motion")) {
      Section mo = ts.object("motion");
      cfg.tissue.motion.kind = mo.str("kind");
      if (cfg.tissue.motion.kind == "none") {
      } else if (cfg.tissue.motion.kind == "constant") {
        cfg.tissue.motion.velocity = mo.vec3("velocity");
      } else if (cfg.tissue.motion.kind == "rotation") {
        cfg.tissue.motion.center = mo.vec3("center");
        cfg.tissue.motion.axis = mo.vec3_or("axis", cfg.tissue.motion.axis);
        cfg.tissue.motion.angular_velocity = mo.num("angular_velocity");
        if (!(norm(cfg.tissue.motion.axis) > 0.0))
          bad_field("tissue.motion.axis", "must be a nonzero direction");
      } else {
        bad_field("tissue.motion.kind", "must be \"none\", \"constant\", or \"rotation\"");
      }
      mo.finish();
    }
    ts.finish();
  }

  {
    Section rfc = root.object("rf");
    cfg.rf.sound_speed = rfc.num_or("sound_speed", cfg.rf.sound_speed);
    cfg.rf.attenuation_db_cm_mhz =
        rfc.num_or("attenuation_db_cm_mhz", cfg.rf.attenuation_db_cm_mhz);
    cfg.rf.sampling_rate = rfc.num("sampling_rate");
    cfg.rf.duration = rfc.num("duration");
    cfg.rf.angles_deg = rfc.num_array("angles_deg");
    cfg.rf.memory_budget_bytes = rfc.u64_or("memory_budget_bytes", cfg.rf.memory_budget_bytes);
    rfc.finish();
    check_positive(cfg.rf.sound_speed, "rf.sound_speed");
    if (cfg.rf.attenuation_db_cm_mhz < 0.0)
      bad_field("rf.attenuation_db_cm_mhz", "must be non-negative");
    check_positive(cfg.rf.sampling_rate, "rf.sampling_rate");
    check_positive(cfg.rf.duration, "rf.duration");
    if (cfg.rf.angles_deg.empty()) bad_field("rf.angles_deg", "needs at least one transmit angle");
    for (double a : cfg.rf.angles_deg) {
      if (!(std::abs(a) < 90.0)) bad_field("rf.angles_deg", "angles must lie in (-90, 90)");
    }
  }

  {
    Section bf = root.object("beamform");
    FlowGrid g = parse_grid_section(bf, "grid");
    cfg.beamform.grid.dims = g.dims;
    cfg.beamform.grid.spacing = g.spacing;
    cfg.beamform.grid.origin = g.origin;
    cfg.beamform.f_number = bf.num_or("f_number", cfg.beamform.f_number);
    cfg.beamform.lowpass_taps = bf.integer_or("lowpass_taps", cfg.beamform.lowpass_taps);
    cfg.beamform.memory_budget_bytes =
        bf.u64_or("memory_budget_bytes", cfg.beamform.memory_budget_bytes);
    cfg.beamform.matrix_budget_bytes =
        bf.u64_or("matrix_budget_bytes", cfg.beamform.matrix_budget_bytes);
    cfg.beamform.cache_matrices = bf.boolean_or("cache_matrices", cfg.beamform.cache_matrices);
    bf.finish();
    if (cfg.beamform.lowpass_taps < 1) bad_field("beamform.lowpass_taps", "must be at least 1");
  }

  {
    Section po = root.object("post");
    cfg.post.svd_lo = po.integer_or("svd_lo", cfg.post.svd_lo);
    cfg.post.svd_hi = po.integer_or("svd_hi", cfg.post.svd_hi);
    cfg.post.bmode_dynamic_range_db =
        po.num_or("bmode_dynamic_range_db", cfg.post.bmode_dynamic_range_db);
    cfg.post.pd_dynamic_range_db = po.num_or("pd_dynamic_range_db", cfg.post.pd_dynamic_range_db);
    cfg.post.ground_truth_sigma_voxels =
        po.num_or("ground_truth_sigma_voxels", cfg.post.ground_truth_sigma_voxels);
    po.finish();
    if (cfg.post.svd_lo < 1) bad_field("post.svd_lo", "must be at least 1");
    if (cfg.post.svd_hi < 0) bad_field("post.svd_hi", "must be 0 (all) or at least 1");
    check_positive(cfg.post.bmode_dynamic_range_db, "post.bmode_dynamic_range_db");
    check_positive(cfg.post.pd_dynamic_range_db, "post.pd_dynamic_range_db");
    check_positive(cfg.post.ground_truth_sigma_voxels, "post.ground_truth_sigma_voxels");
  }

  root.finish();

  // Canonical per-section dumps feed the stage content hashes.  The default
  // json object keeps keys sorted, so formatting and key order in the file
  // do not perturb the hash.
  for (const char* name :
       {"transducer", "vessel", "flow", "particles", "tissue", "rf", "beamform", "post"}) {
    cfg.section_dump[name] = j.at(name).dump();
  }

  return cfg;
}

rf::Transducer load_transducer_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open transducer file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("transducer file " + path + " is not valid JSON: " + e.what());
  }

  Section root(j, "transducer");
  rf::Transducer t;
  t.name = root.str("name");

  {
    Section geo = root.object("geometry");
    if (geo.has("linear")) {
      Section lin = geo.object("linear");
      int n = lin.integer("n_elements");
      double pitch = lin.num("pitch");
      lin.finish();
      if (n < 1) bad_field("transducer.geometry.linear.n_elements", "must be at least 1");
      check_positive(pitch, "transducer.geometry.linear.pitch");
      t.pitch = pitch;
      t.elements.reserve(static_cast<std::size_t>(n));
      double mid = (n - 1) / 2.0;
      for (int i = 0; i < n; ++i) t.elements.push_back({(i - mid) * pitch, 0.0, 0.0});
    } else if (geo.has("matrix")) {
      Section mat = geo.object("matrix");
      int nx = mat.integer("nx");
      int ny = mat.integer("ny");
      double px = mat.num("pitch_x");
      double py = mat.num("pitch_y");
      mat.finish();
      if (nx < 1 || ny < 1) bad_field("transducer.geometry.matrix", "grid must be at least 1x1");
      check_positive(px, "transducer.geometry.matrix.pitch_x");
      check_positive(py, "transducer.geometry.matrix.pitch_y");
      t.pitch = px;
      t.elements.reserve(static_cast<std::size_t>(nx) * ny);
      double mx = (nx - 1) / 2.0, my = (ny - 1) / 2.0;
      for (int jy = 0; jy < ny; ++jy) {
        for (int ix = 0; ix < nx; ++ix) {
          t.elements.push_back({(ix - mx) * px, (jy - my) * py, 0.0});
        }
      }
    } else {
      bad_field("transducer.geometry", "expected a \"linear\" or \"matrix\" layout");
    }
    geo.finish();
  }

  t.half_width = root.num("element_half_width");
  t.subelements = root.integer_or("subelements", t.subelements);
  t.center_frequency = root.num("center_frequency");
  t.fractional_bandwidth = root.num_or("fractional_bandwidth", t.fractional_bandwidth);
  if (root.has("elevation")) {
    Section el = root.object("elevation");
    t.elevation_height = el.num("height");
    t.elevation_focus = el.num("focus");
    t.elevation_core_weight = el.num_or("core_weight", t.elevation_core_weight);
    t.elevation_tail_weight = el.num_or("tail_weight", t.elevation_tail_weight);
    t.elevation_aperture_factor = el.num_or("aperture_factor", t.elevation_aperture_factor);
    el.finish();
  } else {
    t.elevation_height = 0.0;
    t.elevation_focus = 0.0;
  }
  root.finish();

  try {
    rf::validate_transducer(t);
  } catch (const std::exception& e) {
    throw ConfigError("transducer file " + path + ": " + e.what());
  }
  return t;
}

rf::Transducer resolve_transducer(const RunConfig& config) {
  const std::string& preset = config.transducer_preset;
  if (preset == "l11-4v") return rf::l11_4v();
  if (preset == "matrix32x32") return rf::matrix32x32();
  fs::path file(preset);
  if (file.is_relative()) file = fs::path(config.config_dir) / file;
  if (!fs::exists(file)) {
    throw ConfigError("transducer.preset: unknown preset \"" + preset +
                      "\" (not a builtin preset and no transducer file at " + file.string() +
                      ")");
  }
  return load_transducer_json(file.string());
}

ValidationReport validate_config(const RunConfig& config) {
  ValidationReport rep;
  auto error = [&rep](std::string m) { rep.errors.push_back(std::move(m)); };
  auto warn = [&rep](std::string m) { rep.warnings.push_back(std::move(m)); };

  std::optional<rf::Transducer> td;
  try {
    td = resolve_transducer(config);
  } catch (const std::exception& e) {
    error(e.what());
  }

  bool sampling_ok = false;
  if (td) {
    double fc = td->center_frequency;
    double fs = config.rf.sampling_rate;
    if (fs <= 2.0 * fc) {
      error("rf.sampling_rate: " + fmt(fs) + " Hz is sampling below Nyquist for the " + fmt(fc) +
            " Hz carrier");
    } else if (fs < 4.0 * fc) {
      error("rf.sampling_rate: the echo synthesizer needs at least 4 samples per carrier "
            "period; got " +
            fmt(fs / fc) + "x the center frequency");
    } else {
      sampling_ok = true;
    }
  }

  // Memory budgets: the planners know the real working-set model, so let
  // them judge the configured budgets against the configured problem size.
  if (td && sampling_ok) {
    std::size_t n_tissue = 0;
    try {
      double lambda = config.rf.sound_speed / td->center_frequency;
      n_tissue = tissue::cloud_count(config.tissue.region, lambda,
                                     config.tissue.density_per_lambda2);
      rf::MediumParams medium;
      medium.c = config.rf.sound_speed;
      medium.attenuation_db_cm_mhz = config.rf.attenuation_db_cm_mhz;
      medium.scatterer_memory_budget = config.rf.memory_budget_bytes;
      rf::plan_rf_chunks(*td, n_tissue + static_cast<std::size_t>(config.particles.count), medium,
                         config.rf.sampling_rate, config.rf.duration,
                         config.rf.memory_budget_bytes);
    } catch (const std::exception& e) {
      error(std::string("rf.memory_budget_bytes: ") + e.what());
    }
  }
  {
    std::size_t per_voxel = 16ull * std::max<std::size_t>(config.rf.angles_deg.size(), 1);
    if (config.beamform.memory_budget_bytes < per_voxel) {
      error("beamform.memory_budget_bytes: too small to hold even one voxel of transmit "
            "accumulators (needs at least " +
            fmt(per_voxel) + " bytes)");
    }
  }

  // Field-of-view sanity for the reconstruction grid.
  if (td) {
    const auto& g = config.beamform.grid;
    double z_min = g.origin.z;
    double z_max = g.origin.z + (g.dims[2] - 1) * g.spacing.z;
    if (z_min <= 0.0) {
      warn("beamform.grid: the shallowest voxels sit at or behind the array face, outside the "
           "imaging field of view");
    }
    double xe_min = td->elements.front().x, xe_max = xe_min;
    for (const Vec3& e : td->elements) {
      xe_min = std::min(xe_min, e.x);
      xe_max = std::max(xe_max, e.x);
    }
    if (config.beamform.f_number > 0.0 && z_max > 0.0) {
      double half = z_max / (2.0 * config.beamform.f_number);
      double gx_min = g.origin.x;
      double gx_max = g.origin.x + (g.dims[0] - 1) * g.spacing.x;
      if (gx_min < xe_min - half || gx_max > xe_max + half) {
        warn("beamform.grid: lateral extent [" + fmt(gx_min) + ", " + fmt(gx_max) +
             "] m leaves the receive field of view [" + fmt(xe_min - half) + ", " +
             fmt(xe_max + half) + "] m at the deepest voxels");
      }
    }
    double two_way = 2.0 * z_max / config.rf.sound_speed;
    if (z_max > 0.0 && config.rf.duration < two_way) {
      warn("rf.duration: the recording window ends at " + fmt(config.rf.duration) +
           " s, before the " + fmt(two_way) + " s two-way time of the deepest voxels");
    }
  }

  // The analytic parabolic profile needs the single straight tube vessel.
  if (config.flow.source == "poiseuille") {
    if (config.vessel.kind != "tube") {
      error("flow.source: the \"poiseuille\" source needs vessel.kind \"tube\"; branched "
            "trees must import a solved field");
    } else {
      const FlowGrid& g = config.flow.grid;
      Vec3 lo = g.origin;
      Vec3 hi{g.origin.x + (g.dims[0] - 1) * g.spacing.x,
              g.origin.y + (g.dims[1] - 1) * g.spacing.y,
              g.origin.z + (g.dims[2] - 1) * g.spacing.z};
      double r = config.vessel.radius;
      Vec3 a = config.vessel.start, b = config.vessel.end;
      Vec3 t_lo{std::min(a.x, b.x) - r, std::min(a.y, b.y) - r, std::min(a.z, b.z) - r};
      Vec3 t_hi{std::max(a.x, b.x) + r, std::max(a.y, b.y) + r, std::max(a.z, b.z) + r};
      if (t_lo.x < lo.x || t_lo.y < lo.y || t_lo.z < lo.z || t_hi.x > hi.x || t_hi.y > hi.y ||
          t_hi.z > hi.z) {
        warn("flow.grid: the vessel tube extends outside the sampled flow grid; velocities "
             "beyond the grid are not represented");
      }
    }
  } else if (config.flow.source == "file") {
    fs::path p(config.flow.path);
    if (p.is_relative()) p = fs::path(config.config_dir) / p;
    if (!fs::exists(p)) error("flow.path: no flow field file at " + p.string());
  }

  // The ensemble filter needs a real ensemble.
  int frames = config.particles.n_frames;
  if (frames < 2) {
    error("particles.n_frames: the ensemble clutter filter needs at least 2 frames, got " +
          fmt(frames));
  } else {
    int hi = config.post.svd_hi == 0 ? frames : config.post.svd_hi;
    if (config.post.svd_lo > hi || hi > frames) {
      error("post.svd_lo/post.svd_hi: retained band [" + fmt(config.post.svd_lo) + ", " +
            fmt(hi) + "] must satisfy 1 <= lo <= hi <= n_frames = " + fmt(frames));
    }
    auto voxels = static_cast<std::size_t>(config.beamform.grid.dims[0]) *
                  config.beamform.grid.dims[1] * config.beamform.grid.dims[2];
    if (voxels < static_cast<std::size_t>(frames)) {
      error("particles.n_frames: the ensemble filter needs at least as many voxels as frames "
            "(grid has " +
            fmt(voxels) + ", ensemble has " + fmt(frames) + ")");
    }
  }

  return rep;
}

std::string transducer_dump(const rf::Transducer& t) {
  json j;
  j["name"] = t.name;
  j["half_width"] = t.half_width;
  j["subelements"] = t.subelements;
  j["pitch"] = t.pitch;
  j["center_frequency"] = t.center_frequency;
  j["fractional_bandwidth"] = t.fractional_bandwidth;
  j["elevation_height"] = t.elevation_height;
  j["elevation_focus"] = t.elevation_focus;
  j["elevation_core_weight"] = t.elevation_core_weight;
  j["elevation_tail_weight"] = t.elevation_tail_weight;
  j["elevation_aperture_factor"] = t.elevation_aperture_factor;
  json els = json::array();
  for (const Vec3& e : t.elements) els.push_back(json::array({e.x, e.y, e.z}));
  j["elements"] = std::move(els);
  return j.dump();
}

}  // namespace fqf::pipeline
