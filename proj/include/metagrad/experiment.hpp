#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metagrad/optimizer.hpp"
#include "metagrad/tasks.hpp"
#include "metagrad/verification.hpp"

namespace metagrad {

// Where w for a pointwise audit comes from: explicit, or sampled in the ball.
struct AuditPoint {
  std::optional<Vec> w;
  double radius_fraction = 0.5;
};

struct AuditSpec {
  // bias | second_moment | grad_gap | stepsize_moments | smoothness | hvp | kshot
  std::string type;
  AuditPoint point;
  std::size_t task = 0;
  std::vector<int> sizes;  // D_in, D_test or K values depending on type
  int D_o = 1;
  double phi = 1.0;
  int n_mc = 100000;
  int n_points = 1;
};

// Fully resolved experiment: every defaulted field is filled in.
struct ExperimentConfig {
  std::string description;
  nlohmann::json family_source;  // as written: inline family, family_path, or generate block
  OptimizerConfig optimizer;
  std::vector<Algorithm> algorithms{Algorithm::kMAML, Algorithm::kFOMAML, Algorithm::kHFMAML};
  std::vector<std::uint64_t> seeds;
  std::vector<AuditSpec> audits;
  // Initial point drawn in the trust ball instead of an explicit w0.
  std::optional<double> w0_random_scale;
  std::uint64_t w0_random_seed = 0;
};

// Parses a config document; relative family paths resolve against base_dir.
// Throws ConfigError on unknown keys or invalid values.
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

TaskFamily build_family(const ExperimentConfig& config, const std::filesystem::path& base_dir = {});

// Generates a family from {"kind", "n_tasks", "dim", "similarity", "seed", ...}.
TaskFamily generate_family(const nlohmann::json& knobs);

// The initial iterate for the given family (explicit w0, random draw, or zero).
Vec resolve_w0(const ExperimentConfig& config, const TaskFamily& family);

// Config as JSON with every field spelled out, for sidecars.
nlohmann::json resolved_json(const ExperimentConfig& config, const TaskFamily& family);

nlohmann::json optimizer_to_json(const OptimizerConfig& config);

// Runs the configured audits in order.
std::vector<BoundAudit> run_audits(const ExperimentConfig& config, const TaskFamily& family,
                                   nlohmann::json* extra = nullptr);

}  // namespace metagrad
