#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fqf/core/error.hpp"
#include "fqf/pipeline/config.hpp"
#include "fqf/pipeline/run.hpp"
#include "fqf/rf/transducer.hpp"
#include "fqf/tissue/cloud.hpp"

using namespace fqf;
using namespace fqf::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path temp_root(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "fqf_pipeline_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A pipeline sized to finish in a couple of seconds: a short tube along x,
// a handful of tracers and background scatterers, one transmit, and a tiny
// reconstruction grid.
json micro_config(const std::string& out_dir) {
  json j;
  j["seed"] = 77;
  j["output_dir"] = out_dir;
  j["transducer"] = {{"preset", "l11-4v"}};
  j["vessel"] = {{"kind", "tube"},
                 {"start", {-1.5e-3, 0.0, 4e-3}},
                 {"end", {1.5e-3, 0.0, 4e-3}},
                 {"radius", 4e-4}};
  j["flow"] = {{"source", "poiseuille"},
               {"v_max", 0.05},
               {"grid",
                {{"dims", {41, 13, 13}},
                 {"spacing", {1e-4, 1e-4, 1e-4}},
                 {"origin", {-2e-3, -6e-4, 3.4e-3}}}}};
  j["particles"] = {{"count", 40},
                    {"n_frames", 4},
                    {"frame_rate", 500.0},
                    {"rel_tol", 1e-6},
                    {"inlet_samples", 200}};
  j["tissue"] = {{"density_per_lambda2", 1.0},
                 {"region", {{"lo", {-1.2e-3, -5e-4, 3e-3}}, {"hi", {1.2e-3, 5e-4, 5e-3}}}},
                 {"blood_contrast_db", -20.0},
                 {"reflectivity", "gaussian"},
                 {"motion", {{"kind", "none"}}}};
  j["rf"] = {{"sound_speed", 1540.0},
             {"attenuation_db_cm_mhz", 0.5},
             {"sampling_rate", 3.08e7},
             {"duration", 8e-6},
             {"angles_deg", {0.0}},
             {"memory_budget_bytes", 2000000000}};
  j["beamform"] = {{"grid",
                    {{"dims", {12, 1, 12}},
                     {"spacing", {1.5e-4, 1.5e-4, 1.5e-4}},
                     {"origin", {-8.25e-4, 0.0, 3.5e-3}}}},
                   {"f_number", 1.5},
                   {"lowpass_taps", 33},
                   {"memory_budget_bytes", 100000000},
                   {"matrix_budget_bytes", 512000000},
                   {"cache_matrices", true}};
  j["post"] = {{"svd_lo", 2},
               {"svd_hi", 4},
               {"bmode_dynamic_range_db", 75.0},
               {"pd_dynamic_range_db", 60.0},
               {"ground_truth_sigma_voxels", 1.0}};
  return j;
}

std::string write_config(const fs::path& path, const json& j) {
  std::ofstream f(path);
  f << j.dump(2) << '\n';
  REQUIRE(f.good());
  return path.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string config_error_of(const json& j, const fs::path& dir, const std::string& leaf) {
  std::string path = write_config(dir / leaf, j);
  try {
    load_config(path);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool any_contains(const std::vector<std::string>& messages, const std::string& needle) {
  for (const std::string& m : messages) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("pipeline stages are listed in dependency order") {
  const std::vector<std::string> expect = {"vessel", "flow",     "particles", "tissue",
                                           "rf",     "beamform", "post",      "metrics"};
  CHECK(stage_names() == expect);
}

TEST_CASE("config errors name the offending field") {
  fs::path dir = temp_root("config_errors");
  const std::string out = (dir / "out").string();

  {
    json j = micro_config(out);
    j["rf"].erase("sampling_rate");
    std::string msg = config_error_of(j, dir, "missing.json");
    CHECK(msg.find("rf.sampling_rate") != std::string::npos);
    CHECK(msg.find("missing") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j["rf"]["sample_rate"] = 3.08e7;
    std::string msg = config_error_of(j, dir, "unknown.json");
    CHECK(msg.find("rf.sample_rate") != std::string::npos);
    CHECK(msg.find("unknown") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j["particles"]["count"] = "many";
    std::string msg = config_error_of(j, dir, "type.json");
    CHECK(msg.find("particles.count") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j["vessel"]["kind"] = "torus";
    std::string msg = config_error_of(j, dir, "kind.json");
    CHECK(msg.find("vessel.kind") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j.erase("post");
    std::string msg = config_error_of(j, dir, "nosection.json");
    CHECK(msg.find("post") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j["seed"] = -3;
    std::string msg = config_error_of(j, dir, "seed.json");
    CHECK(msg.find("seed") != std::string::npos);
  }
  {
    json j = micro_config(out);
    j["flow"]["grid"]["spacing"] = {1e-4, 0.0, 1e-4};
    std::string msg = config_error_of(j, dir, "spacing.json");
    CHECK(msg.find("flow.grid.spacing") != std::string::npos);
  }
  {
    std::ofstream f(dir / "broken.json");
    f << "{ not json";
    f.close();
    CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
  }
}

TEST_CASE("an undefined transducer preset is reported on its field") {
  fs::path dir = temp_root("preset_errors");
  json j = micro_config((dir / "out").string());
  j["transducer"]["preset"] = "v99-9";
  std::string path = write_config(dir / "config.json", j);

  RunConfig cfg = load_config(path);
  ValidationReport report = validate_config(cfg);
  REQUIRE(!report.errors.empty());
  CHECK(any_contains(report.errors, "transducer.preset"));
  CHECK(any_contains(report.errors, "v99-9"));

  try {
    run_pipeline(path);
    FAIL("expected a configuration error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("transducer.preset") != std::string::npos);
  }
}

TEST_CASE("validation flags cross-stage inconsistencies") {
  fs::path dir = temp_root("validate");
  const std::string out = (dir / "out").string();

  {
    RunConfig cfg = load_config(write_config(dir / "clean.json", micro_config(out)));
    ValidationReport report = validate_config(cfg);
    CHECK(report.errors.empty());
    CHECK(report.warnings.empty());
  }
  {
    json j = micro_config(out);
    j["rf"]["sampling_rate"] = 1.4e7;  // below twice the 7.7 MHz carrier
    RunConfig cfg = load_config(write_config(dir / "nyquist.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "sampling below Nyquist"));
  }
  {
    json j = micro_config(out);
    j["rf"]["sampling_rate"] = 2.0e7;  // above Nyquist, below the synthesis floor
    RunConfig cfg = load_config(write_config(dir / "floor.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "center frequency"));
  }
  {
    json j = micro_config(out);
    j["beamform"]["grid"]["origin"] = {50e-3, 0.0, 3.5e-3};
    RunConfig cfg = load_config(write_config(dir / "fov.json", j));
    CHECK(any_contains(validate_config(cfg).warnings, "field of view"));
  }
  {
    json j = micro_config(out);
    j["rf"]["duration"] = 1e-6;
    RunConfig cfg = load_config(write_config(dir / "short.json", j));
    CHECK(any_contains(validate_config(cfg).warnings, "recording window"));
  }
  {
    json j = micro_config(out);
    j["post"]["svd_lo"] = 5;  // the ensemble has only 4 frames
    RunConfig cfg = load_config(write_config(dir / "band.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "post.svd_lo"));
  }
  {
    json j = micro_config(out);
    j["particles"]["n_frames"] = 1;
    RunConfig cfg = load_config(write_config(dir / "frames.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "particles.n_frames"));
  }
  {
    json j = micro_config(out);
    j["vessel"] = {{"kind", "lsystem"}, {"iterations", 3}};
    RunConfig cfg = load_config(write_config(dir / "branched.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "poiseuille"));
  }
  {
    json j = micro_config(out);
    j["flow"] = {{"source", "file"}, {"path", "does-not-exist.fqf"}};
    RunConfig cfg = load_config(write_config(dir / "missingflow.json", j));
    CHECK(any_contains(validate_config(cfg).errors, "flow.path"));
  }
}

TEST_CASE("transducer preset files reproduce the builtin presets exactly") {
  {
    rf::Transducer file = load_transducer_json(FQF_SOURCE_DIR "/presets/l11-4v.json");
    rf::Transducer ref = rf::l11_4v();
    CHECK(file.name == ref.name);
    CHECK(file.half_width == ref.half_width);
    CHECK(file.subelements == ref.subelements);
    CHECK(file.pitch == ref.pitch);
    CHECK(file.center_frequency == ref.center_frequency);
    CHECK(file.fractional_bandwidth == ref.fractional_bandwidth);
    CHECK(file.elevation_height == ref.elevation_height);
    CHECK(file.elevation_focus == ref.elevation_focus);
    CHECK(file.elevation_core_weight == ref.elevation_core_weight);
    CHECK(file.elevation_tail_weight == ref.elevation_tail_weight);
    CHECK(file.elevation_aperture_factor == ref.elevation_aperture_factor);
    REQUIRE(file.elements.size() == ref.elements.size());
    for (std::size_t i = 0; i < ref.elements.size(); ++i) {
      CHECK(file.elements[i].x == ref.elements[i].x);
      CHECK(file.elements[i].y == ref.elements[i].y);
      CHECK(file.elements[i].z == ref.elements[i].z);
    }
    CHECK(transducer_dump(file) == transducer_dump(ref));
  }
  {
    rf::Transducer file = load_transducer_json(FQF_SOURCE_DIR "/presets/matrix32x32.json");
    rf::Transducer ref = rf::matrix32x32();
    CHECK(transducer_dump(file) == transducer_dump(ref));
  }
}

TEST_CASE("bundled run configurations load and validate cleanly") {
  for (const char* name : {"/configs/demo.json", "/configs/demo-motion.json",
                           "/configs/desk.json"}) {
    CAPTURE(name);
    RunConfig cfg = load_config(std::string(FQF_SOURCE_DIR) + name);
    ValidationReport report = validate_config(cfg);
    CHECK(report.errors.empty());
    CHECK(report.warnings.empty());
  }
}

TEST_CASE("micro pipeline runs end to end with content-hash caching") {
  fs::path dir = temp_root("e2e");
  fs::path out = dir / "out1";
  json base = micro_config(out.string());
  fs::path cfg_path = dir / "config.json";
  write_config(cfg_path, base);

  // Fresh run: every stage executes and reports its outputs.
  RunResult first = run_pipeline(cfg_path.string());
  REQUIRE(first.manifests.size() == 8);
  for (const StageManifest& m : first.manifests) {
    CAPTURE(m.stage);
    CHECK(!m.cached);
    CHECK(!m.outputs.empty());
    for (const std::string& o : m.outputs) CHECK(fs::exists(out / o));
    CHECK(fs::exists(out / "manifests" / (m.stage + ".json")));
  }
  CHECK(fs::exists(out / "post/pd.pgm"));
  CHECK(fs::exists(out / "post/bmode.pgm"));
  CHECK(fs::exists(out / "post/gt.pgm"));
  CHECK(fs::exists(out / "post/svd_report.json"));
  CHECK(fs::exists(out / "metrics/metrics.csv"));
  CHECK(!fs::exists(out / ".lock"));  // released on completion

  // Second run: nothing changed, so every stage is skipped.
  RunResult second = run_pipeline(cfg_path.string());
  REQUIRE(second.manifests.size() == 8);
  for (const StageManifest& m : second.manifests) {
    CAPTURE(m.stage);
    CHECK(m.cached);
  }

  std::string pd_bytes = slurp(out / "post/pd.fqf");
  std::string metrics_bytes = slurp(out / "metrics/metrics.csv");
  std::string rf_bytes = slurp(out / "rf/frame_0002_tx_00.fqf");

  // Deleting an intermediate reruns exactly its producer, reproducing the
  // same bytes; downstream stages stay cached because their inputs hash the
  // same.
  fs::remove(out / "post/pd.fqf");
  RunResult third = run_pipeline(cfg_path.string());
  for (const StageManifest& m : third.manifests) {
    CAPTURE(m.stage);
    CHECK(m.cached == (m.stage != "post"));
  }
  CHECK(slurp(out / "post/pd.fqf") == pd_bytes);

  fs::remove(out / "rf/frame_0002_tx_00.fqf");
  RunResult fourth = run_pipeline(cfg_path.string());
  for (const StageManifest& m : fourth.manifests) {
    CAPTURE(m.stage);
    CHECK(m.cached == (m.stage != "rf"));
  }
  CHECK(slurp(out / "rf/frame_0002_tx_00.fqf") == rf_bytes);

  // A config edit invalidates the stages it feeds and everything downstream
  // of them, and nothing else; reverting restores the original bytes.
  {
    json edited = base;
    edited["post"]["pd_dynamic_range_db"] = 55.0;
    write_config(cfg_path, edited);
    RunResult changed = run_pipeline(cfg_path.string());
    for (const StageManifest& m : changed.manifests) {
      CAPTURE(m.stage);
      CHECK(m.cached == (m.stage != "post" && m.stage != "metrics"));
    }
    CHECK(slurp(out / "post/pd.fqf") != pd_bytes);

    write_config(cfg_path, base);
    RunResult reverted = run_pipeline(cfg_path.string());
    for (const StageManifest& m : reverted.manifests) {
      CAPTURE(m.stage);
      CHECK(m.cached == (m.stage != "post" && m.stage != "metrics"));
    }
    CHECK(slurp(out / "post/pd.fqf") == pd_bytes);
    CHECK(slurp(out / "metrics/metrics.csv") == metrics_bytes);
  }

  // Same config and seed into a fresh directory: byte-identical results.
  {
    RunOptions opts;
    opts.output_dir = (dir / "out2").string();
    RunResult other = run_pipeline(cfg_path.string(), opts);
    REQUIRE(other.manifests.size() == 8);
    CHECK(slurp(dir / "out2/post/pd.fqf") == pd_bytes);
    CHECK(slurp(dir / "out2/metrics/metrics.csv") == metrics_bytes);
    CHECK(slurp(dir / "out2/post/gt.pgm") == slurp(out / "post/gt.pgm"));
  }

  // A stage filter touches only the named stages, reusing upstream caches.
  {
    RunOptions opts;
    opts.stages = {"post", "metrics"};
    RunResult filtered = run_pipeline(cfg_path.string(), opts);
    REQUIRE(filtered.manifests.size() == 2);
    CHECK(filtered.manifests[0].stage == "post");
    CHECK(filtered.manifests[1].stage == "metrics");
    CHECK(filtered.manifests[0].cached);
    CHECK(filtered.manifests[1].cached);
  }

  // Unknown stage names are configuration errors.
  {
    RunOptions opts;
    opts.stages = {"bogus"};
    CHECK_THROWS_AS(run_pipeline(cfg_path.string(), opts), ConfigError);
  }

  // Filtered stages cannot run without their upstream manifests.
  {
    RunOptions opts;
    opts.stages = {"beamform"};
    opts.output_dir = (dir / "out_missing").string();
    try {
      run_pipeline(cfg_path.string(), opts);
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("missing upstream") != std::string::npos);
    }
  }

  // A held lock blocks a second run of the same output directory.
  {
    std::ofstream lock(out / ".lock");
    lock << "held\n";
    lock.close();
    try {
      run_pipeline(cfg_path.string());
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(std::string(e.what()).find("lock") != std::string::npos);
    }
    fs::remove(out / ".lock");
  }

  // A different seed invalidates the whole chain.
  {
    RunOptions opts;
    opts.seed = 78;
    RunResult reseeded = run_pipeline(cfg_path.string(), opts);
    for (const StageManifest& m : reseeded.manifests) {
      CAPTURE(m.stage);
      CHECK(!m.cached);
    }
  }
}

TEST_CASE("moving tissue writes one advected cloud per frame") {
  fs::path dir = temp_root("motion");
  fs::path out = dir / "out";
  json j = micro_config(out.string());
  j["tissue"]["motion"] = {{"kind", "constant"}, {"velocity", {0.0, 0.0, 2e-3}}};
  fs::path cfg_path = dir / "config.json";
  write_config(cfg_path, j);

  RunOptions opts;
  opts.stages = {"vessel", "flow", "tissue"};
  RunResult result = run_pipeline(cfg_path.string(), opts);
  REQUIRE(result.manifests.size() == 3);
  CHECK(result.manifests[2].stage == "tissue");
  CHECK(result.manifests[2].outputs.size() == 4);

  tissue::ScattererCloud c0 = tissue::read_cloud((out / "tissue/frame_0000.fqf").string());
  tissue::ScattererCloud c3 = tissue::read_cloud((out / "tissue/frame_0003.fqf").string());
  REQUIRE(c0.size() == c3.size());
  REQUIRE(c0.size() > 0);
  double dt = 3.0 / 500.0;
  int checked = 0;
  for (std::size_t i = 0; i < c0.size(); ++i) {
    // Scatterers that could reach the region edge freeze there; check the
    // interior ones for the exact closed-form translation.
    if (c0.positions[i].z + 2e-3 * dt < 5e-3 - 1e-5) {
      CHECK(std::abs(c3.positions[i].z - c0.positions[i].z - 2e-3 * dt) < 1e-8);
      CHECK(c3.positions[i].x == c0.positions[i].x);
      CHECK(c3.positions[i].y == c0.positions[i].y);
      ++checked;
    }
  }
  CHECK(checked > 0);
}
