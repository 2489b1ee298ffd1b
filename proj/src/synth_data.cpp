#include "polyproj/synth_data.hpp"

#include <cmath>
#include <random>

#include "polyproj/errors.hpp"
#include "polyproj/rng.hpp"

namespace polyproj {

namespace {

constexpr int kTaskHiddenDim = 32;
constexpr long kDrawBudget = 1000000;

// Seed streams within one dataset seed.
enum : std::uint64_t { kStreamTask = 1, kStreamSamples = 2, kStreamSplit = 3 };

Eigen::MatrixXd gaussian_matrix(int rows, int cols, double scale, std::mt19937_64& rng) {
  Eigen::MatrixXd w(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) w(i, j) = scale * standard_normal(rng);
  return w;
}

Eigen::MatrixXd pick_columns(const Eigen::MatrixXd& src, const std::vector<int>& idx) {
  Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = src.col(idx[i]);
  return out;
}

}  // namespace

Eigen::MatrixXd SyntheticDataset::train_inputs() const { return pick_columns(inputs, train_idx); }
Eigen::MatrixXd SyntheticDataset::train_targets() const { return pick_columns(targets, train_idx); }
Eigen::MatrixXd SyntheticDataset::test_inputs() const { return pick_columns(inputs, test_idx); }
Eigen::MatrixXd SyntheticDataset::test_targets() const { return pick_columns(targets, test_idx); }

SyntheticDataset generate(int n_samples, const LinearConstraintSet& cs, std::uint64_t seed) {
  if (n_samples < 1) throw UsageError("generate: n_samples must be >= 1");
  cs.validate();
  if (cs.dim() != 8) throw UsageError("generate: constraint set must have dimension 8");
  if (!cs.anchor)
    throw UsageError("generate: constraint set carries no anchor point; build it with the "
                     "feasible-anchor generator");
  const int m = cs.dim();
  const Eigen::VectorXd& anchor = *cs.anchor;

  // Task weights from their own stream: the mapping is a function of the
  // seed alone, not of how many samples get drawn.
  std::mt19937_64 task_rng(derive_seed(seed, kStreamTask));
  const Eigen::MatrixXd w1 =
      gaussian_matrix(kTaskHiddenDim, kSynthInputDim, std::sqrt(1.0 / kSynthInputDim), task_rng);
  const Eigen::MatrixXd w2 =
      gaussian_matrix(m, kTaskHiddenDim, std::sqrt(1.0 / kTaskHiddenDim), task_rng);

  SyntheticDataset ds;
  ds.constraints = cs;
  ds.seed = seed;
  ds.inputs.resize(kSynthInputDim, n_samples);
  ds.targets.resize(m, n_samples);

  std::mt19937_64 sample_rng(derive_seed(seed, kStreamSamples));
  int accepted = 0;
  long draws = 0;
  Eigen::VectorXd x(kSynthInputDim);
  while (accepted < n_samples) {
    if (draws >= kDrawBudget && accepted < 0.001 * static_cast<double>(draws))
      throw NumericError("generate: acceptance rate below 0.1% over " +
                         std::to_string(kDrawBudget) +
                         " draws; widen the constraint margin or loosen the system");
    for (int k = 0; k < kSynthInputDim; ++k) x(k) = standard_normal(sample_rng);
    ++draws;
    const Eigen::VectorXd y = anchor + w2 * (w1 * x).array().tanh().matrix();
    if (evaluate(cs, y).max_violation > 0.0) continue;
    ds.inputs.col(accepted) = x;
    ds.targets.col(accepted) = y;
    ++accepted;
  }

  // 80/20 split on a shuffled index order.
  std::mt19937_64 split_rng(derive_seed(seed, kStreamSplit));
  const std::vector<int> order = shuffled_indices(n_samples, split_rng);
  const int n_train = (n_samples * 8 + 5) / 10;
  ds.train_idx.assign(order.begin(), order.begin() + n_train);
  ds.test_idx.assign(order.begin() + n_train, order.end());
  return ds;
}

}  // namespace polyproj
