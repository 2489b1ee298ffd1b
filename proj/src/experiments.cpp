#include "polyproj/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "polyproj/errors.hpp"
#include "polyproj/io.hpp"
#include "polyproj/qp_oracle.hpp"
#include "polyproj/rng.hpp"

namespace polyproj {

namespace {

// Seed streams hanging off one experiment seed. Model init and batch order
// are method-independent so that method comparisons share everything except
// the projection/loss wiring.
enum : std::uint64_t { kStreamCs = 10, kStreamData = 11, kStreamInit = 12, kStreamTrain = 13 };

class PhaseTimer {
 public:
  explicit PhaseTimer(std::string label)
      : label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}
  ~PhaseTimer() {
    const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
    std::cerr << "[timing] " << label_ << " " << dt.count() << "s\n";
  }

 private:
  std::string label_;
  std::chrono::steady_clock::time_point start_;
};

std::string weight_mode_name(WeightMode m) {
  return m == WeightMode::OneOverM ? "one_over_m" : "one_over_violated";
}

WeightMode weight_mode_from_name(const std::string& s) {
  if (s == "one_over_m") return WeightMode::OneOverM;
  if (s == "one_over_violated") return WeightMode::OneOverViolated;
  throw UsageError("unknown weight mode '" + s + "'");
}

std::string step_rule_name(StepRule r) {
  return r == StepRule::Surrogate ? "surrogate" : "per_constraint";
}

StepRule step_rule_from_name(const std::string& s) {
  if (s == "surrogate") return StepRule::Surrogate;
  if (s == "per_constraint") return StepRule::PerConstraint;
  throw UsageError("unknown step rule '" + s + "'");
}

nlohmann::json epoch_traces_json(const TrainResult& tr) {
  nlohmann::json j;
  std::vector<double> loss, mse_p, mse_r, viol;
  for (const auto& e : tr.epochs) {
    loss.push_back(e.loss);
    mse_p.push_back(e.mse_projected);
    mse_r.push_back(e.mse_raw);
    viol.push_back(e.mean_violation);
  }
  j["loss"] = loss;
  j["mse_projected"] = mse_p;
  j["mse_raw"] = mse_r;
  j["violation"] = viol;
  return j;
}

void append_summary_stats(nlohmann::json& summary, const std::string& key,
                          const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  summary[key] = {{"mean", mean}, {"stddev", std::sqrt(var)}, {"n", values.size()}};
}

}  // namespace

nlohmann::json projection_config_to_json(const ProjectionConfig& cfg) {
  return {{"relaxation", cfg.relaxation},
          {"layers", cfg.layers},
          {"epsilon", cfg.epsilon},
          {"weight_mode", weight_mode_name(cfg.weight_mode)},
          {"step_rule", step_rule_name(cfg.step_rule)}};
}

ProjectionConfig projection_config_from_json(const nlohmann::json& j) {
  ProjectionConfig cfg;
  cfg.relaxation = j.value("relaxation", cfg.relaxation);
  cfg.layers = j.value("layers", cfg.layers);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  if (j.contains("weight_mode")) cfg.weight_mode = weight_mode_from_name(j["weight_mode"]);
  if (j.contains("step_rule")) cfg.step_rule = step_rule_from_name(j["step_rule"]);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    cfg.n_samples = d.value("n_samples", cfg.n_samples);
    cfg.constraint_rows = d.value("constraint_rows", cfg.constraint_rows);
    cfg.margin = d.value("margin", cfg.margin);
    cfg.dataset_path = d.value("path", cfg.dataset_path);
  }
  if (j.contains("projection")) cfg.projection = projection_config_from_json(j["projection"]);
  if (j.contains("model")) {
    const auto& m = j["model"];
    cfg.hidden = m.value("hidden", cfg.hidden);
    if (m.contains("activation")) cfg.activation = activation_from_name(m["activation"]);
    cfg.model_path = m.value("path", cfg.model_path);
  }
  if (j.contains("constraints")) {
    cfg.constraints_path = j["constraints"].value("path", cfg.constraints_path);
  }
  if (j.contains("training")) {
    const auto& t = j["training"];
    cfg.training.epochs = t.value("epochs", cfg.training.epochs);
    cfg.training.batch_size = t.value("batch_size", cfg.training.batch_size);
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    auto& opt = cfg.training.optimizer;
    opt.learning_rate = o.value("learning_rate", opt.learning_rate);
    opt.decay = o.value("decay", opt.decay);
    opt.weight_decay = o.value("weight_decay", opt.weight_decay);
    opt.epsilon = o.value("epsilon", opt.epsilon);
  }
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    if (l.contains("variant")) cfg.loss.variant = loss_variant_from_name(l["variant"]);
    cfg.loss.alpha = l.value("alpha", cfg.loss.alpha);
    cfg.loss.fixed_penalty = l.value("fixed_penalty", cfg.loss.fixed_penalty);
  }
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("seg")) {
    const auto& s = j["seg"];
    cfg.seg_images = s.value("images", cfg.seg_images);
    cfg.seg_grid = s.value("grid", cfg.seg_grid);
    cfg.seg_classes = s.value("classes", cfg.seg_classes);
  }
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.validate();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["dataset"] = {{"n_samples", n_samples},
                  {"constraint_rows", constraint_rows},
                  {"margin", margin}};
  if (!dataset_path.empty()) j["dataset"]["path"] = dataset_path;
  j["projection"] = projection_config_to_json(projection);
  j["model"] = {{"hidden", hidden}, {"activation", activation_name(activation)}};
  if (!model_path.empty()) j["model"]["path"] = model_path;
  if (!constraints_path.empty()) j["constraints"] = {{"path", constraints_path}};
  j["training"] = {{"epochs", training.epochs}, {"batch_size", training.batch_size}};
  j["optimizer"] = {{"learning_rate", training.optimizer.learning_rate},
                    {"decay", training.optimizer.decay},
                    {"weight_decay", training.optimizer.weight_decay},
                    {"epsilon", training.optimizer.epsilon}};
  j["loss"] = {{"variant", loss_variant_name(loss.variant)},
               {"alpha", loss.alpha},
               {"fixed_penalty", loss.fixed_penalty}};
  j["seeds"] = seeds;
  j["seg"] = {{"images", seg_images}, {"grid", seg_grid}, {"classes", seg_classes}};
  j["out"] = out_dir;
  return j;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw UsageError("config: seed list must be nonempty");
  if (n_samples < 1) throw UsageError("config: n_samples must be >= 1");
  if (constraint_rows < 1) throw UsageError("config: constraint_rows must be >= 1");
  if (margin < 0.0) throw UsageError("config: margin must be >= 0");
  projection.validate();
  training.validate();
  loss.validate();
  if (seg_images < 1 || seg_grid < 1 || seg_classes < 2)
    throw UsageError("config: seg demo needs images >= 1, grid >= 1, classes >= 2");
}

double RunResult::cell(std::size_t row, const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end() || row >= rows.size())
    throw UsageError("result: no cell (" + std::to_string(row) + ", " + column + ")");
  const auto& s = rows[row][static_cast<std::size_t>(it - columns.begin())];
  return std::stod(s);
}

std::string to_csv(const RunResult& result) {
  std::ostringstream out;
  for (std::size_t c = 0; c < result.columns.size(); ++c)
    out << (c ? "," : "") << result.columns[c];
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  return out.str();
}

RunResult table_from_csv(const std::string& csv) {
  RunResult r;
  std::istringstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (first) {
      r.columns = std::move(cells);
      first = false;
    } else {
      if (cells.size() != r.columns.size()) throw UsageError("CSV: ragged row");
      r.rows.push_back(std::move(cells));
    }
  }
  return r;
}

nlohmann::json result_to_json(const RunResult& result) {
  nlohmann::json j;
  j["format"] = "polyproj.result.v1";
  j["kind"] = result.kind;
  j["config"] = result.config;
  j["columns"] = result.columns;
  j["rows"] = result.rows;
  j["traces"] = result.traces;
  j["summary"] = result.summary;
  return j;
}

LinearConstraintSet constraints_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                         int rows) {
  return build_random_feasible(8, rows, derive_seed(seed, kStreamCs), cfg.margin).first;
}

SyntheticDataset dataset_for_seed(const ExperimentConfig& cfg, std::uint64_t seed,
                                  const LinearConstraintSet& cs) {
  return generate(cfg.n_samples, cs, derive_seed(seed, kStreamData));
}

MlpModel initial_model(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::vector<int> dims;
  dims.push_back(kSynthInputDim);
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(8);
  return MlpModel::random(dims, cfg.activation, OutputActivation::Identity, 0,
                          derive_seed(seed, kStreamInit));
}

std::uint64_t train_stream(std::uint64_t seed) { return derive_seed(seed, kStreamTrain); }

double eval_mse_raw(const MlpModel& model, const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& targets) {
  return mse(forward(model, inputs), targets);
}

double eval_mse_projected(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, const LinearConstraintSet& cs,
                          const ProjectionConfig& proj_cfg) {
  const Eigen::MatrixXd raw = forward(model, inputs);
  Eigen::MatrixXd proj(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.cols(); ++i)
    proj.col(i) = project(cs, raw.col(i), proj_cfg).result();
  return mse(proj, targets);
}

namespace {

struct SeedRuns {
  LinearConstraintSet cs;
  SyntheticDataset ds;
  Eigen::MatrixXd train_x, train_y, test_x, test_y;
};

SeedRuns prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, int rows) {
  SeedRuns s;
  s.cs = constraints_for_seed(cfg, seed, rows);
  s.ds = dataset_for_seed(cfg, seed, s.cs);
  s.train_x = s.ds.train_inputs();
  s.train_y = s.ds.train_targets();
  s.test_x = s.ds.test_inputs();
  s.test_y = s.ds.test_targets();
  return s;
}

TrainResult train_method(const ExperimentConfig& cfg, const SeedRuns& s, std::uint64_t seed,
                         const ProjectionConfig& proj, const LossSpec& loss,
                         const std::string& label) {
  PhaseTimer timer("train " + label + " seed=" + std::to_string(seed));
  return train(initial_model(cfg, seed), s.train_x, s.train_y, s.cs, proj, loss, cfg.training,
               train_stream(seed));
}

ProjectionConfig with_layers(ProjectionConfig base, int layers) {
  base.layers = layers;
  return base;
}

}  // namespace

RunResult run_compare(const ExperimentConfig& cfg) {
  RunResult result;
  result.kind = "compare";
  result.config = cfg.to_json();
  result.columns = {"method", "seed", "test_mse"};

  std::vector<double> dnn_mses, proj_mses, pdnn_mses;
  for (std::uint64_t seed : cfg.seeds) {
    const SeedRuns s = prepare_seed(cfg, seed, cfg.constraint_rows);

    const LossSpec plain{LossVariant::MseOnProjected, 0.0, 1.0};
    const TrainResult dnn =
        train_method(cfg, s, seed, with_layers(cfg.projection, 0), plain, "dnn");
    const TrainResult pdnn = train_method(cfg, s, seed, cfg.projection, plain, "pdnn");

    const double mse_dnn = eval_mse_raw(dnn.model, s.test_x, s.test_y);
    const double mse_dnn_proj =
        eval_mse_projected(dnn.model, s.test_x, s.test_y, s.cs, cfg.projection);
    const double mse_pdnn =
        eval_mse_projected(pdnn.model, s.test_x, s.test_y, s.cs, cfg.projection);

    const std::string seed_str = std::to_string(seed);
    result.rows.push_back({"dnn", seed_str, format_double(mse_dnn)});
    result.rows.push_back({"dnn_proj", seed_str, format_double(mse_dnn_proj)});
    result.rows.push_back({"pdnn", seed_str, format_double(mse_pdnn)});
    dnn_mses.push_back(mse_dnn);
    proj_mses.push_back(mse_dnn_proj);
    pdnn_mses.push_back(mse_pdnn);

    result.traces["dnn"][seed_str] = epoch_traces_json(dnn);
    result.traces["pdnn"][seed_str] = epoch_traces_json(pdnn);
  }
  append_summary_stats(result.summary, "dnn", dnn_mses);
  append_summary_stats(result.summary, "dnn_proj", proj_mses);
  append_summary_stats(result.summary, "pdnn", pdnn_mses);
  return result;
}

RunResult run_layer_ablation(const ExperimentConfig& cfg) {
  RunResult result;
  result.kind = "layer_ablation";
  result.config = cfg.to_json();
  result.columns = {"layers", "seed", "test_mse", "raw_violation"};
  const std::vector<int> layer_counts = {0, 1, 2, 3, 5, 10, 20};

  for (int layers : layer_counts) {
    std::vector<double> mses;
    for (std::uint64_t seed : cfg.seeds) {
      const SeedRuns s = prepare_seed(cfg, seed, cfg.constraint_rows);
      const ProjectionConfig proj = with_layers(cfg.projection, layers);
      const LossSpec plain{LossVariant::MseOnProjected, 0.0, 1.0};
      const TrainResult tr =
          train_method(cfg, s, seed, proj, plain, "pdnn_T" + std::to_string(layers));

      // Test MSE of the method's own inference path (projection included
      // when layers > 0) plus the raw-output violation level.
      const double test_mse =
          layers == 0 ? eval_mse_raw(tr.model, s.test_x, s.test_y)
                      : eval_mse_projected(tr.model, s.test_x, s.test_y, s.cs, proj);
      const Eigen::MatrixXd raw = forward(tr.model, s.test_x);
      double viol = 0.0;
      for (Eigen::Index i = 0; i < raw.cols(); ++i)
        viol += evaluate(s.cs, raw.col(i)).max_violation;
      viol /= static_cast<double>(raw.cols());

      result.rows.push_back({std::to_string(layers), std::to_string(seed),
                             format_double(test_mse), format_double(viol)});
      mses.push_back(test_mse);
    }
    append_summary_stats(result.summary, "T" + std::to_string(layers), mses);
  }
  return result;
}

RunResult run_alpha_ablation(const ExperimentConfig& cfg) {
  RunResult result;
  result.kind = "alpha_ablation";
  result.config = cfg.to_json();
  result.columns = {"alpha", "seed", "test_mse"};
  const std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};

  for (double alpha : alphas) {
    std::vector<double> mses;
    for (std::uint64_t seed : cfg.seeds) {
      const SeedRuns s = prepare_seed(cfg, seed, cfg.constraint_rows);
      const LossSpec blended{LossVariant::BlendedAlpha, alpha, 1.0};
      const TrainResult tr =
          train_method(cfg, s, seed, cfg.projection, blended, "alpha" + format_double(alpha));
      const double test_mse =
          eval_mse_projected(tr.model, s.test_x, s.test_y, s.cs, cfg.projection);
      result.rows.push_back(
          {format_double(alpha), std::to_string(seed), format_double(test_mse)});
      mses.push_back(test_mse);
    }
    append_summary_stats(result.summary, "alpha" + format_double(alpha), mses);
  }
  return result;
}

RunResult run_constraint_sweep(const ExperimentConfig& cfg) {
  RunResult result;
  result.kind = "constraint_sweep";
  result.config = cfg.to_json();
  result.columns = {"constraints", "method", "seed", "test_mse"};
  const std::vector<int> row_counts = {3, 4, 5, 6, 7};

  for (int rows : row_counts) {
    const std::string shape = std::to_string(rows) + "x8";
    std::vector<double> dnn_v, fix_v, pen_v, proj_v, pdnn_v;
    for (std::uint64_t seed : cfg.seeds) {
      const SeedRuns s = prepare_seed(cfg, seed, rows);
      const ProjectionConfig no_proj = with_layers(cfg.projection, 0);
      const LossSpec plain{LossVariant::MseOnProjected, 0.0, 1.0};
      const LossSpec fixed{LossVariant::FixedPenalty, 0.0, cfg.loss.fixed_penalty};
      const LossSpec resid{LossVariant::ResidualPenalty, 0.0, 1.0};

      const TrainResult dnn = train_method(cfg, s, seed, no_proj, plain, shape + " dnn");
      const TrainResult fix = train_method(cfg, s, seed, no_proj, fixed, shape + " fixed");
      const TrainResult pen = train_method(cfg, s, seed, no_proj, resid, shape + " penalty");
      const TrainResult pdnn = train_method(cfg, s, seed, cfg.projection, plain, shape + " pdnn");

      const double v_dnn = eval_mse_raw(dnn.model, s.test_x, s.test_y);
      const double v_fix = eval_mse_raw(fix.model, s.test_x, s.test_y);
      const double v_pen = eval_mse_raw(pen.model, s.test_x, s.test_y);
      const double v_proj =
          eval_mse_projected(dnn.model, s.test_x, s.test_y, s.cs, cfg.projection);
      const double v_pdnn =
          eval_mse_projected(pdnn.model, s.test_x, s.test_y, s.cs, cfg.projection);

      const std::string seed_str = std::to_string(seed);
      result.rows.push_back({shape, "dnn", seed_str, format_double(v_dnn)});
      result.rows.push_back({shape, "fixed_penalty", seed_str, format_double(v_fix)});
      result.rows.push_back({shape, "penalty", seed_str, format_double(v_pen)});
      result.rows.push_back({shape, "dnn_proj", seed_str, format_double(v_proj)});
      result.rows.push_back({shape, "pdnn", seed_str, format_double(v_pdnn)});
      dnn_v.push_back(v_dnn);
      fix_v.push_back(v_fix);
      pen_v.push_back(v_pen);
      proj_v.push_back(v_proj);
      pdnn_v.push_back(v_pdnn);
    }
    append_summary_stats(result.summary, shape + " dnn", dnn_v);
    append_summary_stats(result.summary, shape + " fixed_penalty", fix_v);
    append_summary_stats(result.summary, shape + " penalty", pen_v);
    append_summary_stats(result.summary, shape + " dnn_proj", proj_v);
    append_summary_stats(result.summary, shape + " pdnn", pdnn_v);
  }
  return result;
}

namespace {

struct SegImage {
  std::vector<int> present;           // labels present, ascending
  std::vector<int> truth;             // per-pixel label
  Eigen::MatrixXd features;           // classes x pixels
};

SegImage make_seg_image(int n_pixels, int n_classes, std::mt19937_64& rng) {
  SegImage img;
  const int n_fg = 1 + static_cast<int>(rng() % 2);
  std::vector<int> labels;
  for (int l = 1; l < n_classes; ++l) labels.push_back(l);
  for (int k = 0; k < n_fg && !labels.empty(); ++k) {
    const auto pick = static_cast<std::size_t>(rng() % labels.size());
    img.present.push_back(labels[pick]);
    labels.erase(labels.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(img.present.begin(), img.present.end());

  img.truth.resize(static_cast<std::size_t>(n_pixels));
  img.features.resize(n_classes, n_pixels);
  for (int i = 0; i < n_pixels; ++i) {
    int label = 0;
    if (uniform01(rng) > 0.5)
      label = img.present[static_cast<std::size_t>(rng() % img.present.size())];
    img.truth[static_cast<std::size_t>(i)] = label;
    for (int c = 0; c < n_classes; ++c)
      img.features(c, i) = (c == label ? 1.5 : 0.0) + 0.8 * standard_normal(rng);
  }
  return img;
}

// Feature->score net with an identity-boosted first/last layer so argmax
// correlates with the true label without any training.
MlpModel make_seg_scorer(int n_classes, std::uint64_t seed) {
  const int hidden = 16;
  MlpModel model = MlpModel::random({n_classes, hidden, n_classes}, Activation::Tanh,
                                    OutputActivation::SoftmaxPerGroup, n_classes, seed);
  for (int c = 0; c < n_classes; ++c) {
    model.layers[0].weights.row(c) *= 0.3;
    model.layers[0].weights(c, c) += 1.2;
    model.layers[1].weights.col(c) *= 0.3;
    model.layers[1].weights(c, c) += 1.2;
  }
  return model;
}

double family_violation(const ViolationReport& rep, int begin, int end) {
  double v = 0.0;
  for (int j = begin; j < end; ++j) v += std::max(rep.residuals(j), 0.0);
  return v;
}

double pixel_accuracy(const Eigen::VectorXd& scores, const std::vector<int>& truth,
                      int n_classes) {
  int hits = 0;
  const int n_pixels = static_cast<int>(truth.size());
  for (int i = 0; i < n_pixels; ++i) {
    int best = 0;
    for (int c = 1; c < n_classes; ++c)
      if (scores(i * n_classes + c) > scores(i * n_classes + best)) best = c;
    if (best == truth[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_pixels);
}

}  // namespace

RunResult run_seg_demo(const ExperimentConfig& cfg) {
  RunResult result;
  result.kind = "seg_demo";
  result.config = cfg.to_json();
  result.columns = {"image",           "present",          "suppression_pre", "suppression_post",
                    "foreground_pre",  "foreground_post",  "background_pre",  "background_post",
                    "accuracy_pre",    "accuracy_post"};

  const std::uint64_t seed = cfg.seeds.front();
  const int n_pixels = cfg.seg_grid * cfg.seg_grid;
  const int n_classes = cfg.seg_classes;
  const MlpModel scorer = make_seg_scorer(n_classes, derive_seed(seed, 999));

  std::vector<double> acc_pre_all, acc_post_all, sup_pre_all, sup_post_all;
  nlohmann::json images = nlohmann::json::array();

  for (int idx = 0; idx < cfg.seg_images; ++idx) {
    std::mt19937_64 rng(derive_seed(seed, 1000 + static_cast<std::uint64_t>(idx)));
    const SegImage img = make_seg_image(n_pixels, n_classes, rng);
    const LinearConstraintSet cs =
        build_segmentation_constraints(n_pixels, n_classes, img.present);

    // Scores per pixel, flattened pixel-major to match the constraint layout.
    const Eigen::MatrixXd scores = forward(scorer, img.features);
    Eigen::VectorXd p(n_pixels * n_classes);
    for (int i = 0; i < n_pixels; ++i)
      p.segment(i * n_classes, n_classes) = scores.col(i);

    const Eigen::VectorXd q = project(cs, p, cfg.projection).result();

    const int n_absent = n_classes - 1 - static_cast<int>(img.present.size());
    const int fg_end = n_absent + static_cast<int>(img.present.size());
    const ViolationReport pre = evaluate(cs, p);
    const ViolationReport post = evaluate(cs, q);

    const double sup_pre = family_violation(pre, 0, n_absent);
    const double sup_post = family_violation(post, 0, n_absent);
    const double fg_pre = family_violation(pre, n_absent, fg_end);
    const double fg_post = family_violation(post, n_absent, fg_end);
    const double bg_pre = family_violation(pre, fg_end, cs.rows());
    const double bg_post = family_violation(post, fg_end, cs.rows());
    const double acc_pre = pixel_accuracy(p, img.truth, n_classes);
    const double acc_post = pixel_accuracy(q, img.truth, n_classes);

    std::string present_str;
    for (std::size_t k = 0; k < img.present.size(); ++k)
      present_str += (k ? "+" : "") + std::to_string(img.present[k]);

    result.rows.push_back({std::to_string(idx), present_str, format_double(sup_pre),
                           format_double(sup_post), format_double(fg_pre), format_double(fg_post),
                           format_double(bg_pre), format_double(bg_post), format_double(acc_pre),
                           format_double(acc_post)});
    images.push_back({{"image", idx},
                      {"present", img.present},
                      {"violations",
                       {{"suppression", {{"pre", sup_pre}, {"post", sup_post}}},
                        {"foreground", {{"pre", fg_pre}, {"post", fg_post}}},
                        {"background", {{"pre", bg_pre}, {"post", bg_post}}},
                        {"total", {{"pre", pre.sum_violation}, {"post", post.sum_violation}}}}},
                      {"accuracy", {{"pre", acc_pre}, {"post", acc_post}}}});

    acc_pre_all.push_back(acc_pre);
    acc_post_all.push_back(acc_post);
    sup_pre_all.push_back(sup_pre);
    sup_post_all.push_back(sup_post);
  }

  result.traces["images"] = images;
  append_summary_stats(result.summary, "accuracy_pre", acc_pre_all);
  append_summary_stats(result.summary, "accuracy_post", acc_post_all);
  append_summary_stats(result.summary, "suppression_pre", sup_pre_all);
  append_summary_stats(result.summary, "suppression_post", sup_post_all);
  return result;
}

nlohmann::json project_once(const LinearConstraintSet& cs, const Eigen::VectorXd& point,
                            const ProjectionConfig& cfg, bool with_oracle) {
  const ProjectionTrace trace = project(cs, point, cfg);
  nlohmann::json j;
  nlohmann::json iterates = nlohmann::json::array();
  for (const auto& y : trace.iterates)
    iterates.push_back(std::vector<double>(y.begin(), y.end()));
  j["iterates"] = iterates;
  j["violations"] = trace.max_violations;
  if (with_oracle) {
    const KktSolution kkt = closest_point(cs, point);
    j["oracle"] = {{"point", std::vector<double>(kkt.point.begin(), kkt.point.end())},
                   {"active_set", kkt.active_set},
                   {"gap", (trace.result() - kkt.point).norm()}};
  }
  return j;
}

}  // namespace polyproj
