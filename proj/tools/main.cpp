// polyproj command line: synthetic-data generation, training, evaluation,
// one-shot projection, and the comparison/ablation experiment runners.
// Results are written as CSV (tables) and JSON (traces); reruns with the
// same config and seed produce byte-identical files.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "polyproj/errors.hpp"
#include "polyproj/experiments.hpp"
#include "polyproj/io.hpp"
#include "polyproj/qp_oracle.hpp"
#include "polyproj/rng.hpp"

namespace {

using namespace polyproj;

struct CliOptions {
  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  int epochs_override = -1;
  bool exact = false;
};

ExperimentConfig load_config(const CliOptions& opts) {
  if (opts.config_path.empty()) throw UsageError("missing --config <file.json>");
  ExperimentConfig cfg = ExperimentConfig::from_json(read_json_file(opts.config_path));
  if (opts.seed_override >= 0)
    cfg.seeds = {static_cast<std::uint64_t>(opts.seed_override)};
  if (opts.epochs_override > 0) cfg.training.epochs = opts.epochs_override;
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  cfg.validate();
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_result(const ExperimentConfig& cfg, const RunResult& result) {
  const std::string csv_path = out_path(cfg, result.kind + ".csv");
  const std::string json_path = out_path(cfg, result.kind + ".json");
  write_text_file(csv_path, to_csv(result));
  write_json_file(json_path, result_to_json(result));
  std::cout << "wrote " << csv_path << " and " << json_path << "\n";
}

LinearConstraintSet resolve_constraints(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.constraints_path.empty())
    return constraint_set_from_json(read_json_file(cfg.constraints_path));
  return constraints_for_seed(cfg, seed, cfg.constraint_rows);
}

int cmd_gen_data(const CliOptions& opts) {
  const ExperimentConfig cfg = load_config(opts);
  const std::uint64_t seed = cfg.seeds.front();
  const LinearConstraintSet cs = resolve_constraints(cfg, seed);
  const SyntheticDataset ds = dataset_for_seed(cfg, seed, cs);
  const std::string data_path =
      cfg.dataset_path.empty() ? out_path(cfg, "dataset.bin") : cfg.dataset_path;
  save_dataset(data_path, ds);
  write_json_file(out_path(cfg, "constraints.json"), to_json(cs));
  std::cout << "wrote " << data_path << " (" << ds.size() << " samples, "
            << cs.rows() << " constraint rows)\n";
  return 0;
}

int cmd_train(const CliOptions& opts) {
  const ExperimentConfig cfg = load_config(opts);
  const std::uint64_t seed = cfg.seeds.front();
  SyntheticDataset ds;
  if (!cfg.dataset_path.empty()) {
    ds = load_dataset(cfg.dataset_path);
  } else {
    const LinearConstraintSet cs = resolve_constraints(cfg, seed);
    ds = dataset_for_seed(cfg, seed, cs);
  }
  const TrainResult tr = train(initial_model(cfg, seed), ds.train_inputs(), ds.train_targets(),
                               ds.constraints, cfg.projection, cfg.loss, cfg.training,
                               train_stream(seed));
  const std::string model_path =
      cfg.model_path.empty() ? out_path(cfg, "model.bin") : cfg.model_path;
  save_model(model_path, tr.model);

  RunResult result;
  result.kind = "train";
  result.config = cfg.to_json();
  result.columns = {"epoch", "loss", "mse_projected", "mse_raw", "violation"};
  for (std::size_t e = 0; e < tr.epochs.size(); ++e) {
    const auto& st = tr.epochs[e];
    result.rows.push_back({std::to_string(e), format_double(st.loss),
                           format_double(st.mse_projected), format_double(st.mse_raw),
                           format_double(st.mean_violation)});
  }
  write_result(cfg, result);
  std::cout << "wrote " << model_path << "\n";
  return 0;
}

int cmd_eval(const CliOptions& opts) {
  const ExperimentConfig cfg = load_config(opts);
  if (cfg.dataset_path.empty() || cfg.model_path.empty())
    throw UsageError("eval needs dataset.path and model.path in the config");
  const SyntheticDataset ds = load_dataset(cfg.dataset_path);
  const MlpModel model = load_model(cfg.model_path);

  nlohmann::json j;
  j["test_mse_raw"] = eval_mse_raw(model, ds.test_inputs(), ds.test_targets());
  j["test_mse_projected"] = eval_mse_projected(model, ds.test_inputs(), ds.test_targets(),
                                               ds.constraints, cfg.projection);
  const Eigen::MatrixXd raw = forward(model, ds.test_inputs());
  double viol = 0.0;
  for (Eigen::Index i = 0; i < raw.cols(); ++i)
    viol += evaluate(ds.constraints, raw.col(i)).max_violation;
  j["test_mean_violation"] = viol / static_cast<double>(raw.cols());
  j["config"] = cfg.to_json();
  write_json_file(out_path(cfg, "eval.json"), j);
  std::cout << "test_mse_raw=" << format_double(j["test_mse_raw"].get<double>())
            << " test_mse_projected=" << format_double(j["test_mse_projected"].get<double>())
            << "\n";
  return 0;
}

int cmd_project(const CliOptions& opts) {
  if (opts.config_path.empty()) throw UsageError("missing --config <file.json>");
  const nlohmann::json j = read_json_file(opts.config_path);
  if (!j.contains("constraints") || !j.contains("point"))
    throw UsageError("project config needs 'constraints' and 'point'");
  const LinearConstraintSet cs = constraint_set_from_json(j.at("constraints"));
  const auto pt = j.at("point").get<std::vector<double>>();
  const Eigen::VectorXd point =
      Eigen::Map<const Eigen::VectorXd>(pt.data(), static_cast<Eigen::Index>(pt.size()));
  ProjectionConfig cfg;
  if (j.contains("config")) cfg = projection_config_from_json(j.at("config"));

  const nlohmann::json out = project_once(cs, point, cfg, opts.exact);
  const std::string out_dir = opts.out_override.empty() ? "results" : opts.out_override;
  std::filesystem::create_directories(out_dir);
  const std::string path = (std::filesystem::path(out_dir) / "projection.json").string();
  write_json_file(path, out);
  if (opts.exact)
    std::cout << "gap to exact closest point: " << format_double(out["oracle"]["gap"].get<double>())
              << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

template <typename Runner>
int run_and_write(const CliOptions& opts, Runner runner) {
  const ExperimentConfig cfg = load_config(opts);
  write_result(cfg, runner(cfg));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable projection onto linear constraint sets"};
  app.require_subcommand(1);

  CliOptions opts;
  auto add_common = [&](CLI::App* cmd, bool with_exact = false) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--seed", opts.seed_override, "override: run a single seed");
    cmd->add_option("--epochs", opts.epochs_override, "override: training epochs");
    cmd->add_option("--out", opts.out_override, "override: output directory");
    if (with_exact)
      cmd->add_flag("--exact", opts.exact, "also solve the exact closest point and report the gap");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  auto* trn = app.add_subcommand("train", "train one model");
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  auto* prj = app.add_subcommand("project", "project one point onto a constraint set");
  auto* cmp = app.add_subcommand("compare", "dnn vs dnn+projection vs pdnn");
  auto* abl = app.add_subcommand("ablate-layers", "sweep the projection layer count");
  auto* ala = app.add_subcommand("ablate-alpha", "sweep the loss blend weight");
  auto* swp = app.add_subcommand("sweep-constraints", "sweep the constraint row count");
  auto* seg = app.add_subcommand("seg-demo", "toy segmentation constraint demo");
  for (auto* cmd : {gen, trn, evl, cmp, abl, ala, swp, seg}) add_common(cmd);
  add_common(prj, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (trn->parsed()) return cmd_train(opts);
    if (evl->parsed()) return cmd_eval(opts);
    if (prj->parsed()) return cmd_project(opts);
    if (cmp->parsed()) return run_and_write(opts, run_compare);
    if (abl->parsed()) return run_and_write(opts, run_layer_ablation);
    if (ala->parsed()) return run_and_write(opts, run_alpha_ablation);
    if (swp->parsed()) return run_and_write(opts, run_constraint_sweep);
    if (seg->parsed()) return run_and_write(opts, run_seg_demo);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
