#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcx/cascades.hpp"
#include "mcx/coverings.hpp"
#include "mcx/spectral.hpp"

namespace mcx {

// Parsed and schema-checked run configuration.  Unknown keys anywhere in the
// JSON are rejected.  Zero values for grid_level / n_max mean "derive from
// the grid" at run time; the raw canonical JSON is kept for hashing.
struct ExperimentConfig {
  std::string model;  // gmc | cascade | mrc | pmc

  // gmc
  double gamma = 0.5;
  std::string kernel = "star-scale";  // or "exact-log" (d = 1 only)

  // cascade
  bool gbm = false;
  double gbm_sigma = 0.0;
  WeightSpec weight;

  // mrc / pmc
  LambdaMeasure lambda;
  double pmc_a = 0.5;

  int d = 1;
  int b = 2;
  int m = 8;
  int grid_level = 0;

  int64_t samples = 16;
  uint64_t master_seed = 1;

  bool est_fourier = true;
  bool est_corrdim = false;
  bool est_boxdim = false;

  int64_t n_max = 0;
  FitOptions fit;
  std::vector<int> corr_levels;  // empty = derived
  std::vector<int> box_levels;

  std::string output_dir;  // empty = nothing persisted
  std::string raw_json;    // canonical echo of the input
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// Standalone spec parsers shared with the CLI.  The lambda shape is
// {builtin: {canonical_alpha}, atoms: [[y, w], ...], density: {kind, c}};
// the weight shape is {kind: discrete|lognormal, values, probs, sigma_w}.
LambdaMeasure parse_lambda_spec(const std::string& json_text);
WeightSpec parse_weight_spec(const std::string& json_text);

// FNV-1a (64-bit) of the canonical JSON, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

struct RunResult {
  std::string hash;
  std::string prediction_name;
  double prediction = 0.0;
  std::string bound = "two-sided";  // "lower" for lower-bound-only models
  std::vector<std::string> warnings;
  double mass_mean = 0.0;
  double mass_std_error = 0.0;
  std::optional<DimensionEstimate> fourier_ensemble;
  std::optional<DimensionEstimate> fourier_pathwise;
  std::optional<DimensionEstimate> corrdim;
  std::optional<DimensionEstimate> boxdim;
  std::string record_json;  // canonical, no wall-clock content
  std::string record_path;  // set when output_dir was given
  std::string bands_path;
  std::string meta_path;
};

// Samples the ensemble in parallel (deterministic reduction by sample id),
// runs the requested estimators, attaches the theory prediction, and writes
// record.json / bands.csv / run_meta.json under output_dir if set.  On error
// the offending stage is named and partial outputs are removed.
RunResult run_experiment(const ExperimentConfig& cfg, int threads = 0);

// Plain sequential driver with identical semantics; the record must be
// byte-identical to run_experiment's at any thread count.  Kept as the
// reference the parallel driver is tested and benchmarked against.
RunResult run_experiment_serial(const ExperimentConfig& cfg);

struct CompareTolerances {
  double fourier = 0.15;
  double corrdim = 0.10;
  double boxdim = 0.10;
};

struct CompareRow {
  std::string estimator;
  bool has_estimate = false;
  double estimate = 0.0;
  double prediction = 0.0;
  double gap = 0.0;
  double tol = 0.0;
  std::string status;  // pass | fail | not run
};

struct CompareReport {
  std::vector<CompareRow> rows;
  bool pass = true;
};

// Verdict table for a persisted record: estimate vs prediction per estimator
// at the given tolerances; a "lower" bound passes when the estimate is no
// more than tol below the prediction.
CompareReport compare_record(const std::string& record_json,
                             const CompareTolerances& tol = {});

}  // namespace mcx
