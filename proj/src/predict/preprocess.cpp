#include "isaac/predict/preprocess.hpp"

#include <cmath>

#include "isaac/util/error.hpp"

namespace isaac::predict {

std::string dimension_of(const std::string& design_column) {
  if (design_column.size() > kMissingSuffix.size() && design_column.ends_with(kMissingSuffix)) {
    return design_column.substr(0, design_column.size() - kMissingSuffix.size());
  }
  return design_column;
}

FoldPreprocessor FoldPreprocessor::fit(const FeatureMatrix& train, double indicator_threshold) {
  if (train.rows() == 0) throw Error(ErrorCode::kEmptyCorpus, "cannot fit preprocessing on zero rows");
  FoldPreprocessor p;
  p.input_columns_ = train.columns;
  const Eigen::Index n = train.rows();
  const double nd = static_cast<double>(n);
  p.fill_.assign(static_cast<std::size_t>(train.cols()), 0.0);

  auto add_source = [&](Eigen::Index c, bool indicator, const Eigen::VectorXd& col) {
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() / nd);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) return;
    p.sources_.push_back({c, indicator, mean, sd});
    const auto& name = train.columns[static_cast<std::size_t>(c)];
    p.design_columns_.push_back(indicator ? name + std::string(kMissingSuffix) : name);
  };

  std::vector<std::pair<Eigen::Index, Eigen::VectorXd>> indicators;
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    double sum = 0.0;
    Eigen::Index present = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!train.missing(i, c)) {
        sum += train.values(i, c);
        ++present;
      }
    }
    const double fill = present > 0 ? sum / static_cast<double>(present) : 0.0;
    p.fill_[static_cast<std::size_t>(c)] = fill;
    Eigen::VectorXd col(n);
    Eigen::VectorXd flag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      col(i) = train.missing(i, c) ? fill : train.values(i, c);
      flag(i) = train.missing(i, c) ? 1.0 : 0.0;
    }
    add_source(c, false, col);
    if (static_cast<double>(n - present) > indicator_threshold * nd) indicators.emplace_back(c, std::move(flag));
  }
  // Indicator columns follow all value columns.
  for (const auto& [c, flag] : indicators) add_source(c, true, flag);
  return p;
}

Eigen::MatrixXd FoldPreprocessor::impute(const FeatureMatrix& m) const {
  std::vector<Eigen::Index> map(input_columns_.size());
  for (std::size_t c = 0; c < input_columns_.size(); ++c) {
    const auto idx = m.column_index(input_columns_[c]);
    if (!idx) throw Error(ErrorCode::kMissingColumn, "matrix lacks model column " + input_columns_[c]);
    map[c] = *idx;
  }
  Eigen::MatrixXd out(m.rows(), design_size());
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    const auto& s = sources_[k];
    const Eigen::Index src = map[static_cast<std::size_t>(s.input)];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const bool miss = m.missing(i, src);
      double v;
      if (s.indicator) v = miss ? 1.0 : 0.0;
      else v = miss ? fill_[static_cast<std::size_t>(s.input)] : m.values(i, src);
      out(i, static_cast<Eigen::Index>(k)) = v;
    }
  }
  return out;
}

Eigen::MatrixXd FoldPreprocessor::transform(const FeatureMatrix& m) const {
  Eigen::MatrixXd out = impute(m);
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    auto col = out.col(static_cast<Eigen::Index>(k));
    col = (col.array() - sources_[k].center) / sources_[k].scale;
  }
  return out;
}

}  // namespace isaac::predict
