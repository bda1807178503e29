#include "isaac/predict/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isaac/util/error.hpp"
#include "isaac/util/parallel.hpp"
#include "isaac/util/rng.hpp"

namespace isaac::predict {
namespace {

// Training data shared by all trees: each feature's sorted distinct values
// and, per row, the index of its value in that list. Split search then works
// on small integer bins instead of sorting doubles at every node.
struct Binned {
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<std::vector<double>> levels;
  std::vector<std::vector<int>> bin;  // bin[f][i]
};

Binned bin_features(const Eigen::MatrixXd& x) {
  Binned b;
  b.n = x.rows();
  b.p = x.cols();
  b.levels.resize(static_cast<std::size_t>(b.p));
  b.bin.resize(static_cast<std::size_t>(b.p));
  for (Eigen::Index f = 0; f < b.p; ++f) {
    auto& lv = b.levels[static_cast<std::size_t>(f)];
    lv.assign(x.col(f).data(), x.col(f).data() + b.n);
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    auto& bf = b.bin[static_cast<std::size_t>(f)];
    bf.resize(static_cast<std::size_t>(b.n));
    for (Eigen::Index i = 0; i < b.n; ++i) {
      bf[static_cast<std::size_t>(i)] =
          static_cast<int>(std::lower_bound(lv.begin(), lv.end(), x(i, f)) - lv.begin());
    }
  }
  return b;
}

struct Split {
  int feature = -1;
  int last_left_bin = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Binned& data, const Eigen::VectorXd& y, const ForestParams& params, int mtry, Rng& rng)
      : data_(data), y_(y), params_(params), mtry_(mtry), rng_(rng) {
    features_.resize(static_cast<std::size_t>(data.p));
    std::iota(features_.begin(), features_.end(), 0);
    std::size_t widest = 1;
    for (const auto& lv : data.levels) widest = std::max(widest, lv.size());
    hist_w_.resize(widest);
    hist_s_.resize(widest);
    hist_c_.resize(widest);
  }

  // rows: distinct bootstrap rows; wt: their weight times multiplicity;
  // cnt: multiplicity.
  RandomForest::Tree build(std::vector<int> rows, std::vector<double> wt, std::vector<int> cnt,
                           Eigen::VectorXd& importance) {
    rows_ = std::move(rows);
    wt_.assign(static_cast<std::size_t>(data_.n), 0.0);
    cnt_.assign(static_cast<std::size_t>(data_.n), 0);
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      wt_[static_cast<std::size_t>(rows_[k])] = wt[k];
      cnt_[static_cast<std::size_t>(rows_[k])] = cnt[k];
    }
    tree_.clear();
    importance_ = &importance;
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  int grow(std::size_t lo, std::size_t hi, int depth) {
    double w = 0.0;
    double s = 0.0;
    long c = 0;
    double ymin = INFINITY;
    double ymax = -INFINITY;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto i = static_cast<std::size_t>(rows_[k]);
      w += wt_[i];
      s += wt_[i] * y_(rows_[k]);
      c += cnt_[i];
      ymin = std::min(ymin, y_(rows_[k]));
      ymax = std::max(ymax, y_(rows_[k]));
    }
    const int id = static_cast<int>(tree_.size());
    tree_.push_back({});
    tree_[static_cast<std::size_t>(id)].value = w > 0.0 ? s / w : 0.0;

    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    if (!depth_ok || c < 2L * params_.min_leaf || ymax - ymin <= 1e-12 * std::max(1.0, std::abs(ymax))) return id;

    const Split split = best_split(lo, hi, w, s);
    if (split.feature < 0) return id;

    const auto& bf = data_.bin[static_cast<std::size_t>(split.feature)];
    const auto mid_it = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(lo),
                                              rows_.begin() + static_cast<std::ptrdiff_t>(hi),
                                              [&](int r) { return bf[static_cast<std::size_t>(r)] <= split.last_left_bin; });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());
    (*importance_)(split.feature) += split.gain;

    const int left = grow(lo, mid, depth + 1);
    const int right = grow(mid, hi, depth + 1);
    auto& node = tree_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split best_split(std::size_t lo, std::size_t hi, double w_total, double s_total) {
    Split best;
    const double parent = s_total * s_total / w_total;
    const std::size_t p = features_.size();
    const std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(mtry_), p);
    const std::size_t n_node = hi - lo;
    for (std::size_t d = 0; d < draws; ++d) {
      const std::size_t pick = d + rng_.uniform_index(p - d);
      std::swap(features_[d], features_[pick]);
      const int f = features_[d];
      const auto& lv = data_.levels[static_cast<std::size_t>(f)];
      const auto& bf = data_.bin[static_cast<std::size_t>(f)];
      if (lv.size() < 2) continue;

      // Occupied bins in increasing order with their sums.
      occupied_.clear();
      if (lv.size() <= 4 * n_node) {
        std::fill_n(hist_c_.begin(), lv.size(), 0);
        std::fill_n(hist_w_.begin(), lv.size(), 0.0);
        std::fill_n(hist_s_.begin(), lv.size(), 0.0);
        for (std::size_t k = lo; k < hi; ++k) {
          const auto i = static_cast<std::size_t>(rows_[k]);
          const int b = bf[i];
          hist_c_[static_cast<std::size_t>(b)] += cnt_[i];
          hist_w_[static_cast<std::size_t>(b)] += wt_[i];
          hist_s_[static_cast<std::size_t>(b)] += wt_[i] * y_(rows_[k]);
        }
        for (std::size_t b = 0; b < lv.size(); ++b) {
          if (hist_c_[b] > 0) occupied_.push_back({static_cast<int>(b), hist_w_[b], hist_s_[b], hist_c_[b]});
        }
      } else {
        for (std::size_t k = lo; k < hi; ++k) {
          const auto i = static_cast<std::size_t>(rows_[k]);
          occupied_.push_back({bf[i], wt_[i], wt_[i] * y_(rows_[k]), cnt_[i]});
        }
        std::sort(occupied_.begin(), occupied_.end(), [](const Cell& a, const Cell& b) { return a.bin < b.bin; });
        std::size_t out = 0;
        for (std::size_t k = 0; k < occupied_.size(); ++k) {
          if (out > 0 && occupied_[out - 1].bin == occupied_[k].bin) {
            occupied_[out - 1].w += occupied_[k].w;
            occupied_[out - 1].s += occupied_[k].s;
            occupied_[out - 1].c += occupied_[k].c;
          } else {
            occupied_[out++] = occupied_[k];
          }
        }
        occupied_.resize(out);
      }
      if (occupied_.size() < 2) continue;

      long c_total = 0;
      for (const auto& cell : occupied_) c_total += cell.c;
      double wl = 0.0;
      double sl = 0.0;
      long cl = 0;
      for (std::size_t k = 0; k + 1 < occupied_.size(); ++k) {
        wl += occupied_[k].w;
        sl += occupied_[k].s;
        cl += occupied_[k].c;
        const long cr = c_total - cl;
        if (cl < params_.min_leaf || cr < params_.min_leaf) continue;
        const double wr = w_total - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double sr = s_total - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain + 1e-12 * std::abs(parent) + 1e-300) {
          best.gain = gain;
          best.feature = f;
          best.last_left_bin = occupied_[k].bin;
          best.threshold = 0.5 * (lv[static_cast<std::size_t>(occupied_[k].bin)] +
                                  lv[static_cast<std::size_t>(occupied_[k + 1].bin)]);
        }
      }
    }
    return best;
  }

  struct Cell {
    int bin;
    double w;
    double s;
    long c;
  };

  const Binned& data_;
  const Eigen::VectorXd& y_;
  const ForestParams& params_;
  int mtry_;
  Rng& rng_;
  std::vector<int> features_;
  std::vector<int> rows_;
  std::vector<double> wt_;
  std::vector<int> cnt_;
  std::vector<double> hist_w_;
  std::vector<double> hist_s_;
  std::vector<long> hist_c_;
  std::vector<Cell> occupied_;
  RandomForest::Tree tree_;
  Eigen::VectorXd* importance_ = nullptr;
};

}  // namespace

RandomForest RandomForest::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                               const ForestParams& params) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || w.size() != n) throw Error(ErrorCode::kInvalidArgument, "forest: row count mismatch");
  if (n == 0) throw Error(ErrorCode::kEmptyCorpus, "forest: no rows");
  if (params.n_trees < 1) throw Error(ErrorCode::kInvalidArgument, "forest: n_trees must be >= 1");
  if (params.min_leaf < 1) throw Error(ErrorCode::kInvalidArgument, "forest: min_leaf must be >= 1");
  if ((w.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "forest: weights must be non-negative with positive sum");
  }
  int mtry = params.mtry > 0 ? params.mtry : static_cast<int>((p + 2) / 3);
  if (p > 0 && mtry > p) throw Error(ErrorCode::kInvalidArgument, "forest: mtry exceeds the feature count");
  mtry = std::max(1, mtry);

  const Eigen::VectorXd wn = w * (static_cast<double>(n) / w.sum());
  const Binned data = bin_features(x);
  const auto n_trees = static_cast<std::size_t>(params.n_trees);

  RandomForest forest;
  forest.trees_.resize(n_trees);
  std::vector<Eigen::VectorXd> per_tree(n_trees, Eigen::VectorXd::Zero(p));
  parallel_for(n_trees, params.threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, t));
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (Eigen::Index k = 0; k < n; ++k) ++count[rng.uniform_index(static_cast<std::uint64_t>(n))];
    std::vector<int> rows;
    std::vector<double> wt;
    std::vector<int> cnt;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = count[static_cast<std::size_t>(i)];
      if (c == 0 || wn(i) == 0.0) continue;
      rows.push_back(static_cast<int>(i));
      wt.push_back(wn(i) * c);
      cnt.push_back(c);
    }
    TreeBuilder builder(data, y, params, mtry, rng);
    forest.trees_[t] = builder.build(std::move(rows), std::move(wt), std::move(cnt), per_tree[t]);
  });

  forest.importance_ = Eigen::VectorXd::Zero(p);
  for (const auto& imp : per_tree) forest.importance_ += imp;
  const double total = forest.importance_.sum();
  if (total > 0.0) forest.importance_ /= total;
  return forest;
}

double RandomForest::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  double sum = 0.0;
  for (const auto& tree : trees_) {
    int k = 0;
    while (tree[static_cast<std::size_t>(k)].feature >= 0) {
      const auto& node = tree[static_cast<std::size_t>(k)];
      k = row(node.feature) <= node.threshold ? node.left : node.right;
    }
    sum += tree[static_cast<std::size_t>(k)].value;
  }
  return sum / static_cast<double>(trees_.size());
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = predict_row(x.row(i));
  return out;
}

}  // namespace isaac::predict
