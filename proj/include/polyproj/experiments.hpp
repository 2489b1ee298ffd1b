#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyproj/constraints.hpp"
#include "polyproj/mlp.hpp"
#include "polyproj/projection.hpp"
#include "polyproj/synth_data.hpp"
#include "polyproj/training.hpp"

namespace polyproj {

/// Everything an experiment run needs, with working defaults; parsed from a
/// JSON config file (missing keys keep their defaults).
struct ExperimentConfig {
  // synthetic dataset; the margin keeps the rejection rate low enough that
  // accepted inputs stay near-unit-Gaussian while a few percent of targets
  // still land close to the boundary
  int n_samples = 10000;
  int constraint_rows = 5;
  double margin = 1.2;

  ProjectionConfig projection;
  std::vector<int> hidden = {128, 128};
  Activation activation = Activation::ReLU;
  TrainConfig training;
  LossSpec loss;

  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "results";

  // seg demo
  int seg_images = 50;
  int seg_grid = 8;  // pixels per side
  int seg_classes = 4;

  // optional file inputs for gen-data / train / eval
  std::string dataset_path;
  std::string model_path;
  std::string constraints_path;

  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
};

nlohmann::json projection_config_to_json(const ProjectionConfig& cfg);
ProjectionConfig projection_config_from_json(const nlohmann::json& j);

/// One experiment's outputs: a fixed-column table (cells pre-formatted for
/// byte-stable CSV), per-epoch traces, per-group summary, and the config
/// echo the run can be reproduced from. Wall-clock timings go to stderr,
/// never into these fields, so reruns are byte-identical.
struct RunResult {
  std::string kind;
  nlohmann::json config;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::json traces;
  nlohmann::json summary;

  double cell(std::size_t row, const std::string& column) const;
};

std::string to_csv(const RunResult& result);
RunResult table_from_csv(const std::string& csv);  // columns and rows only
nlohmann::json result_to_json(const RunResult& result);

RunResult run_compare(const ExperimentConfig& cfg);
RunResult run_layer_ablation(const ExperimentConfig& cfg);
RunResult run_alpha_ablation(const ExperimentConfig& cfg);
RunResult run_constraint_sweep(const ExperimentConfig& cfg);
RunResult run_seg_demo(const ExperimentConfig& cfg);

// One-shot projection for the `project` command; optionally includes the
// exact closest point and the gap to it.
nlohmann::json project_once(const LinearConstraintSet& cs, const Eigen::VectorXd& point,
                            const ProjectionConfig& cfg, bool with_oracle);

// Shared building blocks, also used by the test suites.
LinearConstraintSet constraints_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                         int rows);
SyntheticDataset dataset_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const LinearConstraintSet& cs);
MlpModel initial_model(const ExperimentConfig& cfg, std::uint64_t seed);
std::uint64_t train_stream(std::uint64_t seed);

double eval_mse_raw(const MlpModel& model, const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& targets);
double eval_mse_projected(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, const LinearConstraintSet& cs,
                          const ProjectionConfig& proj_cfg);

}  // namespace polyproj
