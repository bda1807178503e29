#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace isaac::predict {

struct ForestParams {
  int n_trees = 300;
  int mtry = 0;  // 0: ceil(p / 3)
  int min_leaf = 5;
  int max_depth = 0;  // 0: unlimited
  std::uint64_t seed = 42;
  int threads = 1;  // 0: one per hardware thread
};

// CART regression trees on bootstrap resamples. Each tree draws its own
// generator from (seed, tree index), so the fitted forest does not depend on
// the thread count.
class RandomForest {
 public:
  struct Node {
    // Leaves have feature == -1 and carry `value`.
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  using Tree = std::vector<Node>;

  static RandomForest fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                          const ForestParams& params);

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;

  // Total weighted squared-error reduction per feature, normalized to sum 1
  // (all zeros when no split was ever made).
  const Eigen::VectorXd& importance() const { return importance_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  Eigen::VectorXd importance_;
};

}  // namespace isaac::predict
