#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fqf/pipeline/config.hpp"

namespace fqf::pipeline {

// Per-stage execution record, persisted as JSON under <out>/manifests/.
// The hash covers the stage's config section, the global seed, and the
// hashes of its upstream stages, so a stage reruns exactly when something
// it depends on changed.
struct StageManifest {
  std::string stage;
  std::uint64_t hash = 0;
  std::vector<std::string> outputs;  // paths relative to the output dir
  double duration_s = 0.0;
  bool cached = false;  // true when this run skipped the stage
};

struct RunOptions {
  std::vector<std::string> stages;  // empty = all stages
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> memory_budget_bytes;
  std::optional<std::string> output_dir;
};

struct RunResult {
  std::vector<StageManifest> manifests;  // dependency order
  std::string output_dir;
};

// Stage names in dependency order.
const std::vector<std::string>& stage_names();

// Executes the pipeline described by the config file.  Stages run in
// dependency order; a stage whose manifest hash matches and whose outputs
// all exist is skipped.  With a stage filter, skipped-over stages must have
// valid manifests from an earlier run or a StageError is thrown.  A lock
// file in the output dir rejects concurrent runs.  Throws ConfigError on
// bad configs and StageError on execution failures.
RunResult run_pipeline(const std::string& config_path, const RunOptions& options = {});

}  // namespace fqf::pipeline
