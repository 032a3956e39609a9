#include "fqf/pipeline/run.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "fqf/beamform/das.hpp"
#include "fqf/core/error.hpp"
#include "fqf/core/grid.hpp"
#include "fqf/core/rng.hpp"
#include "fqf/hemo/flow_field.hpp"
#include "fqf/hemo/inlet.hpp"
#include "fqf/hemo/particles.hpp"
#include "fqf/post/metrics.hpp"
#include "fqf/post/render.hpp"
#include "fqf/post/svd.hpp"
#include "fqf/rf/simulate.hpp"
#include "fqf/rf/transducer.hpp"
#include "fqf/tissue/classify.hpp"
#include "fqf/tissue/cloud.hpp"
#include "fqf/tissue/motion.hpp"
#include "fqf/vasc/grammar.hpp"
#include "fqf/vasc/stl_io.hpp"
#include "fqf/vasc/tree.hpp"
#include "fqf/vasc/turtle.hpp"

namespace fqf::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kHashSchema = "fqf-run-v1";

struct StageDef {
  const char* name;
  std::vector<const char*> deps;
};

const std::vector<StageDef>& stage_defs() {
  static const std::vector<StageDef> defs = {
      {"vessel", {}},
      {"flow", {"vessel"}},
      {"particles", {"flow"}},
      {"tissue", {"flow"}},
      {"rf", {"tissue", "particles"}},
      {"beamform", {"rf"}},
      {"post", {"beamform", "particles"}},
      {"metrics", {"post"}},
  };
  return defs;
}

std::string pad4(int v) {
  char b[16];
  std::snprintf(b, sizeof b, "%04d", v);
  return b;
}

std::string pad2(int v) {
  char b[16];
  std::snprintf(b, sizeof b, "%02d", v);
  return b;
}

std::string hex64(std::uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

std::string particle_frame_rel(int f) { return "particles/frame_" + pad4(f) + ".fqf"; }
std::string tissue_frame_rel(int f) { return "tissue/frame_" + pad4(f) + ".fqf"; }
std::string rf_frame_rel(int f, int a) {
  return "rf/frame_" + pad4(f) + "_tx_" + pad2(a) + ".fqf";
}
std::string iq_frame_rel(int f) { return "beamform/Frame_" + std::to_string(f + 1) + ".fqf"; }

std::uint64_t file_hash(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  require(f.good(), "cannot open ", p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return fnv1a64(ss.str());
}

fs::path resolve_against(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) p = fs::path(base_dir) / p;
  return p;
}

// Everything a stage's result depends on, folded into one digest: a schema
// tag, the global seed, the stage's own config sections, effective values
// the CLI can override, and the digests of its upstream stages.  Timestamps
// never enter, so an unchanged pipeline hashes identically forever.
std::uint64_t stage_hash(const StageDef& def, const RunConfig& cfg, const std::string& td_dump,
                         const std::map<std::string, std::uint64_t>& dep_hash) {
  std::ostringstream os;
  os << kHashSchema << "\nstage=" << def.name << "\nseed=" << cfg.seed << "\n";
  auto section = [&os, &cfg](const char* s) {
    os << "config:" << s << "=" << cfg.section_dump.at(s) << "\n";
  };
  std::string name = def.name;
  if (name == "vessel") {
    section("vessel");
  } else if (name == "flow") {
    section("flow");
    if (cfg.flow.source == "file") {
      fs::path p = resolve_against(cfg.config_dir, cfg.flow.path);
      require(fs::exists(p), "flow.path: no flow field file at ", p.string());
      os << "flow_file=" << hex64(file_hash(p)) << "\n";
    }
  } else if (name == "particles") {
    section("particles");
  } else if (name == "tissue") {
    section("tissue");
    section("particles");  // frame times drive the advected snapshots
    os << "transducer=" << td_dump << "\n";
    os << "sound_speed=" << std::hexfloat << cfg.rf.sound_speed << std::defaultfloat << "\n";
  } else if (name == "rf") {
    section("rf");
    os << "transducer=" << td_dump << "\n";
    os << "budget=" << cfg.rf.memory_budget_bytes << "\n";
  } else if (name == "beamform") {
    section("beamform");
    os << "transducer=" << td_dump << "\n";
    os << "budget=" << cfg.beamform.memory_budget_bytes << "\n";
  } else if (name == "post") {
    section("post");
  }
  // metrics carries no settings of its own; the post dependency covers it.
  for (const char* d : def.deps) os << "dep:" << d << "=" << hex64(dep_hash.at(d)) << "\n";
  return fnv1a64(os.str());
}

fs::path manifest_path(const fs::path& out, const std::string& stage) {
  return out / "manifests" / (stage + ".json");
}

void write_manifest_file(const fs::path& out, const StageManifest& m) {
  fs::create_directories(out / "manifests");
  json j;
  j["stage"] = m.stage;
  j["hash"] = hex64(m.hash);
  j["outputs"] = m.outputs;
  j["duration_s"] = m.duration_s;
  fs::path p = manifest_path(out, m.stage);
  std::ofstream f(p);
  f << j.dump(2) << '\n';
  require(f.good(), "cannot write manifest ", p.string());
}

// A manifest that is missing or unreadable simply means "not cached".
std::optional<StageManifest> read_manifest_file(const fs::path& out, const std::string& stage) {
  fs::path p = manifest_path(out, stage);
  if (!fs::exists(p)) return std::nullopt;
  std::ifstream f(p);
  try {
    json j;
    f >> j;
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.hash = std::stoull(j.at("hash").get<std::string>(), nullptr, 16);
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.duration_s = j.at("duration_s").get<double>();
    return m;
  } catch (...) {
    return std::nullopt;
  }
}

// One run per output directory: created empty with O_EXCL, removed on exit.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw StageError("another run holds the lock file " + path_.string() +
                       "; remove it if no other run is active");
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

struct StageContext {
  const RunConfig& cfg;
  const rf::Transducer& td;
  fs::path out;

  fs::path abs(const std::string& rel) const { return out / rel; }
};

std::vector<std::string> run_vessel(const StageContext& c) {
  const VesselConfig& vc = c.cfg.vessel;
  vasc::VesselTree tree;
  if (vc.kind == "tube") {
    vasc::VesselSegment seg;
    seg.start = vc.start;
    seg.end = vc.end;
    seg.start_diameter = 2.0 * vc.radius;
    seg.end_diameter = 2.0 * vc.radius;
    tree.segments.push_back(seg);
  } else {
    CounterRng grammar_rng(RngSeed{c.cfg.seed}, "vessel-grammar");
    std::string walk = vasc::rewrite(vasc::default_grammar(), vc.iterations, grammar_rng);
    vasc::TurtleParams tp;
    tp.step_length = vc.step_length;
    tp.root_diameter = vc.root_diameter;
    CounterRng turtle_rng(RngSeed{c.cfg.seed}, "vessel-turtle");
    tree = vasc::interpret(walk, tp, turtle_rng);
  }
  std::vector<std::string> problems = vasc::validate_tree(tree);
  if (!problems.empty()) fail("generated vessel tree is invalid: ", problems.front());
  fs::create_directories(c.out / "vessel");
  vasc::write_tree_json(c.abs("vessel/tree.json").string(), tree);
  vasc::write_stl(c.abs("vessel/mesh.stl").string(), vasc::tessellate_tree(tree));
  return {"vessel/tree.json", "vessel/mesh.stl"};
}

std::vector<std::string> run_flow(const StageContext& c) {
  fs::create_directories(c.out / "flow");
  hemo::FlowField field;
  if (c.cfg.flow.source == "poiseuille") {
    vasc::VesselTree tree = vasc::read_tree_json(c.abs("vessel/tree.json").string());
    require(tree.segments.size() == 1,
            "the analytic parabolic profile needs a single straight tube; the vessel tree has ",
            tree.segments.size(), " segments (import a solved field instead)");
    const vasc::VesselSegment& seg = tree.segments.front();
    require(seg.start_diameter == seg.end_diameter,
            "the analytic parabolic profile needs an untapered tube");
    hemo::Tube tube{seg.start, seg.end, 0.5 * seg.start_diameter};
    field = hemo::poiseuille_field(tube, c.cfg.flow.v_max, c.cfg.flow.grid.dims,
                                   c.cfg.flow.grid.spacing, c.cfg.flow.grid.origin);
  } else {
    fs::path src = resolve_against(c.cfg.config_dir, c.cfg.flow.path);
    hemo::ImportReport rep = hemo::import_flow(src.string());
    if (rep.zeroed_velocity_nodes > 0) {
      std::cerr << "flow: zeroed " << rep.zeroed_velocity_nodes
                << " off-vessel velocity nodes from " << src.string() << "\n";
    }
    field = std::move(rep.field);
  }
  hemo::write_flow_field(c.abs("flow/field.fqf").string(), field);
  return {"flow/field.fqf"};
}

std::vector<std::string> run_particles(const StageContext& c) {
  const ParticlesConfig& pc = c.cfg.particles;
  hemo::FlowField field = hemo::import_flow(c.abs("flow/field.fqf").string()).field;
  hemo::InletDensity density = hemo::inlet_density(field, pc.inlet_samples);
  hemo::IntegrateOptions opts;
  opts.rel_tol = pc.rel_tol;
  double duration = pc.n_frames / pc.frame_rate;
  hemo::ParticleEnsemble ens = hemo::simulate_particles(field, density, pc.count, duration,
                                                        pc.frame_rate, RngSeed{c.cfg.seed}, opts);
  require(static_cast<int>(ens.frames.size()) == pc.n_frames, "tracked ", ens.frames.size(),
          " frames, expected ", pc.n_frames);
  fs::create_directories(c.out / "particles");
  std::vector<std::string> outputs;
  outputs.reserve(ens.frames.size());
  for (int f = 0; f < pc.n_frames; ++f) {
    std::string rel = particle_frame_rel(f);
    hemo::write_particle_frame(c.abs(rel).string(), ens.frames[f], f, f / pc.frame_rate);
    outputs.push_back(std::move(rel));
  }
  return outputs;
}

std::vector<std::string> run_tissue(const StageContext& c) {
  const TissueConfig& tc = c.cfg.tissue;
  hemo::FlowField flow = hemo::import_flow(c.abs("flow/field.fqf").string()).field;
  double lambda = c.cfg.rf.sound_speed / c.td.center_frequency;
  auto law = tc.reflectivity == "uniform" ? tissue::ReflectivityLaw::uniform
                                          : tissue::ReflectivityLaw::gaussian;
  tissue::ScattererCloud cloud = tissue::generate_cloud(tc.region, lambda, tc.density_per_lambda2,
                                                        law, RngSeed{c.cfg.seed});
  cloud = tissue::classify_in_vessel(std::move(cloud), flow.mask);

  // The lumen belongs to the tracer cloud, so scatterers the classifier puts
  // inside the vessel leave the static background entirely.
  tissue::ScattererCloud background;
  background.positions.reserve(cloud.size());
  background.reflectivity.reserve(cloud.size());
  background.label.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.label[i] == tissue::Label::tissue) {
      background.positions.push_back(cloud.positions[i]);
      background.reflectivity.push_back(cloud.reflectivity[i]);
      background.label.push_back(tissue::Label::tissue);
    }
  }

  fs::create_directories(c.out / "tissue");
  std::vector<std::string> outputs;
  if (tc.motion.kind == "none") {
    std::string rel = tissue_frame_rel(0);
    tissue::write_cloud(c.abs(rel).string(), background);
    outputs.push_back(std::move(rel));
    return outputs;
  }

  tissue::MotionModel model =
      tc.motion.kind == "constant"
          ? tissue::constant_motion(tc.motion.velocity)
          : tissue::rotation_motion(tc.motion.center, normalized(tc.motion.axis),
                                    tc.motion.angular_velocity);
  model.has_region = true;
  model.region = tc.region;
  for (int f = 0; f < c.cfg.particles.n_frames; ++f) {
    tissue::ScattererCloud moved =
        tissue::advect(background, model, 0.0, f / c.cfg.particles.frame_rate);
    std::string rel = tissue_frame_rel(f);
    tissue::write_cloud(c.abs(rel).string(), moved);
    outputs.push_back(std::move(rel));
  }
  return outputs;
}

std::vector<std::string> run_rf(const StageContext& c) {
  const RfConfig& rc = c.cfg.rf;
  int n_frames = c.cfg.particles.n_frames;
  int count = c.cfg.particles.count;
  bool static_tissue = c.cfg.tissue.motion.kind == "none";

  std::vector<tissue::ScattererCloud> tissue_frames;
  int n_tissue_frames = static_tissue ? 1 : n_frames;
  tissue_frames.reserve(n_tissue_frames);
  for (int f = 0; f < n_tissue_frames; ++f) {
    tissue_frames.push_back(tissue::read_cloud(c.abs(tissue_frame_rel(f)).string()));
  }

  // A tracer keeps one reflectivity for the whole ensemble; per-tracer lanes
  // keep the draws independent of frame count and worker count.
  std::vector<double> reflectivity(count);
  for (int i = 0; i < count; ++i) {
    CounterRng rng(RngSeed{c.cfg.seed}, "blood-reflectivity", static_cast<std::uint64_t>(i));
    reflectivity[i] = rng.normal();
  }
  std::vector<tissue::ScattererCloud> flow_frames(n_frames);
  for (int f = 0; f < n_frames; ++f) {
    hemo::ParticleFrame pf = hemo::read_particle_frame(c.abs(particle_frame_rel(f)).string());
    require(static_cast<int>(pf.positions.size()) == count, "particle frame ", f, " holds ",
            pf.positions.size(), " tracers, expected ", count);
    flow_frames[f].positions = std::move(pf.positions);
    flow_frames[f].reflectivity = reflectivity;
    flow_frames[f].label.assign(static_cast<std::size_t>(count), tissue::Label::blood);
    tissue::apply_blood_contrast(flow_frames[f], c.cfg.tissue.blood_contrast_db);
  }

  rf::MediumParams medium;
  medium.c = rc.sound_speed;
  medium.attenuation_db_cm_mhz = rc.attenuation_db_cm_mhz;
  medium.scatterer_memory_budget = rc.memory_budget_bytes;

  fs::create_directories(c.out / "rf");
  std::vector<std::string> outputs;
  outputs.reserve(static_cast<std::size_t>(n_frames) * rc.angles_deg.size());
  for (std::size_t a = 0; a < rc.angles_deg.size(); ++a) {
    rf::TxEvent tx = rf::plane_wave_delays(c.td, rc.angles_deg[a] * std::numbers::pi / 180.0,
                                           rc.sound_speed);
    std::vector<rf::RfFrame> frames =
        rf::compose_frames(tissue_frames, flow_frames, static_tissue, c.td, tx, medium,
                           rc.sampling_rate, rc.duration);
    for (int f = 0; f < n_frames; ++f) {
      std::string rel = rf_frame_rel(f, static_cast<int>(a));
      rf::write_rf_frame(c.abs(rel).string(), frames[f], f);
      outputs.push_back(std::move(rel));
    }
  }
  return outputs;
}

std::vector<std::string> run_beamform(const StageContext& c) {
  int n_frames = c.cfg.particles.n_frames;
  int n_angles = static_cast<int>(c.cfg.rf.angles_deg.size());
  std::vector<std::vector<rf::RfFrame>> frames(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    frames[f].reserve(static_cast<std::size_t>(n_angles));
    for (int a = 0; a < n_angles; ++a) {
      fs::path p = c.abs(rf_frame_rel(f, a));
      auto [frame, index] = rf::read_rf_frame(p.string());
      require(index == f, p.string(), ": header frame index ", index, " does not match ", f);
      frames[f].push_back(std::move(frame));
    }
  }

  beamform::BeamformParams bp;
  bp.c = c.cfg.rf.sound_speed;
  bp.center_frequency = c.td.center_frequency;
  bp.f_number = c.cfg.beamform.f_number;
  bp.lowpass_taps = c.cfg.beamform.lowpass_taps;

  beamform::DasOptions opts;
  opts.memory_budget_bytes = c.cfg.beamform.memory_budget_bytes;
  opts.matrix_budget_bytes = c.cfg.beamform.matrix_budget_bytes;
  opts.cache_matrices = c.cfg.beamform.cache_matrices;
  fs::create_directories(c.out / "beamform");
  opts.work_dir = (c.out / "beamform").string();
  opts.write_frames = true;
  opts.keep_chunk_files = false;

  beamform::das_reconstruct(frames, c.cfg.beamform.grid, c.td, bp, opts);

  std::vector<std::string> outputs;
  outputs.reserve(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) outputs.push_back(iq_frame_rel(f));
  return outputs;
}

std::vector<std::string> run_post(const StageContext& c) {
  int n_frames = c.cfg.particles.n_frames;
  std::vector<beamform::IqVolume> ensemble;
  ensemble.reserve(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    ensemble.push_back(beamform::read_iq_volume(c.abs(iq_frame_rel(f)).string()));
  }
  fs::create_directories(c.out / "post");

  std::vector<std::string> outputs;
  auto save_image = [&c, &outputs](const VoxelGrid& img, const std::string& stem) {
    write_grid(c.abs("post/" + stem + ".fqf").string(), img);
    outputs.push_back("post/" + stem + ".fqf");
    const auto& d = img.dims();
    // The portable graymap is 2-D; volumes without a flat axis ship as a
    // depth-axis-preserving projection along elevation.
    VoxelGrid flat = (d[0] == 1 || d[1] == 1 || d[2] == 1) ? img : post::mip(img, 1);
    post::write_pgm(c.abs("post/" + stem + ".pgm").string(), flat);
    outputs.push_back("post/" + stem + ".pgm");
  };

  save_image(post::bmode(ensemble.front(), c.cfg.post.bmode_dynamic_range_db), "bmode");

  int hi = c.cfg.post.svd_hi == 0 ? n_frames : c.cfg.post.svd_hi;
  post::SvdReport report;
  std::vector<beamform::IqVolume> filtered =
      post::svd_filter(ensemble, c.cfg.post.svd_lo, hi, &report);
  VoxelGrid pd = post::power_doppler(filtered);
  save_image(post::render_db(pd, c.cfg.post.pd_dynamic_range_db, post::DbScale::power), "pd");

  std::vector<std::vector<Vec3>> tracks(static_cast<std::size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    tracks[f] = hemo::read_particle_frame(c.abs(particle_frame_rel(f)).string()).positions;
  }
  VoxelGrid gt = post::ground_truth_pd(tracks, ensemble.front().grid,
                                       c.cfg.post.ground_truth_sigma_voxels);
  // The reference goes through the same display mapping as the filtered
  // image, so the similarity metrics compare like with like.
  save_image(post::render_db(gt, c.cfg.post.pd_dynamic_range_db, post::DbScale::power), "gt");

  {
    json j;
    j["n_modes"] = report.n_modes;
    j["keep"] = json::array({report.keep_lo, report.keep_hi});
    j["singular_values"] = report.singular_values;
    j["mode_correlation"] = report.mode_correlation;
    fs::path p = c.abs("post/svd_report.json");
    std::ofstream f(p);
    f << j.dump(2) << '\n';
    require(f.good(), "cannot write ", p.string());
    outputs.push_back("post/svd_report.json");
  }
  return outputs;
}

std::vector<std::string> run_metrics(const StageContext& c) {
  VoxelGrid pd = read_grid(c.abs("post/pd.fqf").string()).first;
  VoxelGrid gt = read_grid(c.abs("post/gt.fqf").string()).first;
  post::MetricsReport rep = post::metrics(pd, gt);
  fs::create_directories(c.out / "metrics");
  {
    fs::path p = c.abs("metrics/metrics.csv");
    std::ofstream f(p);
    f << post::metrics_csv(rep);
    require(f.good(), "cannot write ", p.string());
  }
  {
    fs::path p = c.abs("metrics/metrics.json");
    std::ofstream f(p);
    f << post::metrics_json(rep);
    require(f.good(), "cannot write ", p.string());
  }
  return {"metrics/metrics.csv", "metrics/metrics.json"};
}

std::vector<std::string> run_stage(const std::string& name, const StageContext& ctx) {
  if (name == "vessel") return run_vessel(ctx);
  if (name == "flow") return run_flow(ctx);
  if (name == "particles") return run_particles(ctx);
  if (name == "tissue") return run_tissue(ctx);
  if (name == "rf") return run_rf(ctx);
  if (name == "beamform") return run_beamform(ctx);
  if (name == "post") return run_post(ctx);
  if (name == "metrics") return run_metrics(ctx);
  fail("unknown stage ", name);
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const StageDef& d : stage_defs()) v.emplace_back(d.name);
    return v;
  }();
  return names;
}

RunResult run_pipeline(const std::string& config_path, const RunOptions& options) {
  RunConfig cfg = load_config(config_path);
  if (options.seed) cfg.seed = *options.seed;
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  if (options.memory_budget_bytes) {
    cfg.rf.memory_budget_bytes = *options.memory_budget_bytes;
    cfg.beamform.memory_budget_bytes = *options.memory_budget_bytes;
  }

  std::set<std::string> selected(options.stages.begin(), options.stages.end());
  for (const std::string& s : selected) {
    bool known = false;
    for (const StageDef& d : stage_defs()) known = known || s == d.name;
    if (!known) {
      std::string all;
      for (const std::string& n : stage_names()) all += (all.empty() ? "" : ", ") + n;
      throw ConfigError("unknown stage \"" + s + "\"; stages are " + all);
    }
  }

  ValidationReport report = validate_config(cfg);
  for (const std::string& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (!report.errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const std::string& e : report.errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  rf::Transducer td = resolve_transducer(cfg);
  std::string td_dump = transducer_dump(td);

  fs::path out(cfg.output_dir);
  fs::create_directories(out);
  DirLock lock(out);

  StageContext ctx{cfg, td, out};
  std::map<std::string, std::uint64_t> hash_of;
  RunResult result;
  result.output_dir = out.string();

  for (const StageDef& def : stage_defs()) {
    std::string name = def.name;
    bool run_this = selected.empty() || selected.count(name) > 0;
    if (!run_this) {
      if (auto m = read_manifest_file(out, name)) hash_of[name] = m->hash;
      continue;
    }
    for (const char* dep : def.deps) {
      if (!hash_of.count(dep)) {
        throw StageError(name + ": missing upstream output from the " + std::string(dep) +
                         " stage (no manifest at " + manifest_path(out, dep).string() +
                         "); run it first or widen --stages");
      }
    }

    std::uint64_t h;
    try {
      h = stage_hash(def, cfg, td_dump, hash_of);
    } catch (const ConfigError&) {
      throw;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name + ": " + e.what());
    }

    if (auto m = read_manifest_file(out, name); m && m->hash == h) {
      bool complete = true;
      for (const std::string& o : m->outputs) complete = complete && fs::exists(out / o);
      if (complete) {
        std::cerr << "stage " << name << ": cached\n";
        m->cached = true;
        hash_of[name] = h;
        result.manifests.push_back(std::move(*m));
        continue;
      }
    }

    std::cerr << "stage " << name << ": running\n";
    StageManifest m;
    m.stage = name;
    m.hash = h;
    auto t_start = std::chrono::steady_clock::now();
    try {
      m.outputs = run_stage(name, ctx);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name + " stage failed: " + e.what());
    }
    m.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    m.cached = false;
    write_manifest_file(out, m);
    std::cerr << "stage " << name << ": done in " << m.duration_s << " s\n";
    hash_of[name] = h;
    result.manifests.push_back(std::move(m));
  }
  return result;
}

}  // namespace fqf::pipeline
