#include "isaac/core/matrix.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac {
namespace {

void fill_row(FeatureMatrix& m, Eigen::Index row, const AnnotationRecord& record, const AnnotationSchema& schema) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const auto& id = m.columns[static_cast<std::size_t>(c)];
    const auto v = record.value(id);
    const Dimension* dim = schema.find(id);
    if (v && dim && value_in_range(dim->kind, *v)) {
      m.values(row, c) = *v;
      m.missing(row, c) = false;
    } else {
      if (v) ++m.invalid_cells;
      m.values(row, c) = 0.0;
      m.missing(row, c) = true;
    }
  }
}

std::vector<DimensionKind> kinds_for(const AnnotationSchema& schema, std::span<const std::string> columns) {
  std::vector<DimensionKind> kinds;
  for (const auto& c : columns) {
    const Dimension* d = schema.find(c);
    kinds.push_back(d ? d->kind : DimensionKind::kProportion);
  }
  return kinds;
}

}  // namespace

std::optional<Eigen::Index> FeatureMatrix::column_index(std::string_view id) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == id) return static_cast<Eigen::Index>(i);
  }
  return std::nullopt;
}

void FeatureMatrix::refresh_zero_variance() {
  zero_variance.assign(static_cast<std::size_t>(cols()), true);
  for (Eigen::Index c = 0; c < cols(); ++c) {
    std::optional<double> first;
    for (Eigen::Index r = 0; r < rows(); ++r) {
      if (missing(r, c)) continue;
      if (!first) first = values(r, c);
      else if (values(r, c) != *first) {
        zero_variance[static_cast<std::size_t>(c)] = false;
        break;
      }
    }
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const Eigen::Index> indices) const {
  FeatureMatrix out;
  out.columns = columns;
  out.column_kinds = column_kinds;
  const auto n = static_cast<Eigen::Index>(indices.size());
  out.values.resize(n, cols());
  out.missing.resize(n, cols());
  out.outcome.resize(n);
  out.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = indices[static_cast<std::size_t>(i)];
    out.row_ids.push_back(row_ids[static_cast<std::size_t>(src)]);
    out.row_titles.push_back(row_titles[static_cast<std::size_t>(src)]);
    out.values.row(i) = values.row(src);
    out.missing.row(i) = missing.row(src);
    out.outcome(i) = outcome(src);
    out.weights(i) = weights(src);
  }
  out.refresh_zero_variance();
  return out;
}

FeatureMatrix FeatureMatrix::without_columns(const std::set<std::string>& ids) const {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < cols(); ++c) {
    if (!ids.contains(columns[static_cast<std::size_t>(c)])) keep.push_back(c);
  }
  FeatureMatrix out;
  out.row_ids = row_ids;
  out.row_titles = row_titles;
  out.outcome = outcome;
  out.weights = weights;
  out.values.resize(rows(), static_cast<Eigen::Index>(keep.size()));
  out.missing.resize(rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto c = keep[k];
    out.columns.push_back(columns[static_cast<std::size_t>(c)]);
    out.column_kinds.push_back(column_kinds[static_cast<std::size_t>(c)]);
    out.values.col(static_cast<Eigen::Index>(k)) = values.col(c);
    out.missing.col(static_cast<Eigen::Index>(k)) = missing.col(c);
  }
  out.refresh_zero_variance();
  return out;
}

FeatureMatrix FeatureMatrix::with_row(std::string id, std::string title, const Eigen::RowVectorXd& values_row,
                                      const Eigen::Array<bool, 1, Eigen::Dynamic>& missing_row,
                                      double outcome_value, double weight) const {
  FeatureMatrix out = *this;
  const Eigen::Index n = rows();
  out.values.conservativeResize(n + 1, cols());
  out.missing.conservativeResize(n + 1, cols());
  out.outcome.conservativeResize(n + 1);
  out.weights.conservativeResize(n + 1);
  out.values.row(n) = values_row;
  out.missing.row(n) = missing_row;
  out.outcome(n) = outcome_value;
  out.weights(n) = weight;
  out.row_ids.push_back(std::move(id));
  out.row_titles.push_back(std::move(title));
  out.refresh_zero_variance();
  return out;
}

std::vector<std::string> modeling_columns(const AnnotationSchema& schema, const EncodeOptions& opts) {
  std::vector<std::string> cols;
  for (const auto& d : schema.dimensions()) {
    if (!d.modeling_eligible_by_default() && !opts.include_journal) continue;
    if (opts.excluded.contains(d.id)) continue;
    cols.push_back(d.id);
  }
  return cols;
}

FeatureMatrix encode_matrix(std::span<const RatedBook> books, std::span<const AnnotationRecord> records,
                            const AnnotationSchema& schema, const EncodeOptions& opts) {
  if (books.empty()) throw Error(ErrorCode::kEmptyCorpus, "no rated books to encode");
  std::map<std::string_view, const AnnotationRecord*> by_id;
  for (const auto& r : records) by_id[r.book_id] = &r;

  FeatureMatrix m;
  m.columns = modeling_columns(schema, opts);
  m.column_kinds = kinds_for(schema, m.columns);
  const auto n = static_cast<Eigen::Index>(books.size());
  const auto p = static_cast<Eigen::Index>(m.columns.size());
  m.values = Eigen::MatrixXd::Zero(n, p);
  m.missing = MissingMask::Constant(n, p, true);
  m.outcome.resize(n);
  m.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& book = books[static_cast<std::size_t>(i)];
    const auto it = by_id.find(book.book_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kMissingRecord, "no annotation record for '" + book.title + "' (" + book.book_id + ")");
    }
    if (!book.percentile) {
      throw Error(ErrorCode::kInvalidArgument, "percentile transform has not been applied to '" + book.title + "'");
    }
    m.row_ids.push_back(book.book_id);
    m.row_titles.push_back(book.title);
    fill_row(m, i, *it->second, schema);
    m.outcome(i) = *book.percentile;
    m.weights(i) = book.weight;
  }
  m.refresh_zero_variance();
  return m;
}

FeatureMatrix encode_rows(std::span<const AnnotationRecord> records, std::span<const std::string> titles,
                          const AnnotationSchema& schema, std::span<const std::string> columns) {
  FeatureMatrix m;
  m.columns.assign(columns.begin(), columns.end());
  m.column_kinds = kinds_for(schema, m.columns);
  const auto n = static_cast<Eigen::Index>(records.size());
  const auto p = static_cast<Eigen::Index>(columns.size());
  m.values = Eigen::MatrixXd::Zero(n, p);
  m.missing = MissingMask::Constant(n, p, true);
  m.outcome = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  m.weights = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    m.row_ids.push_back(r.book_id);
    m.row_titles.push_back(static_cast<std::size_t>(i) < titles.size() ? titles[static_cast<std::size_t>(i)] : r.book_id);
    fill_row(m, i, r, schema);
  }
  m.refresh_zero_variance();
  return m;
}

MatrixCsv write_matrix_csv(const FeatureMatrix& m) {
  MatrixCsv out;
  csv::Row header{"book_id"};
  header.insert(header.end(), m.columns.begin(), m.columns.end());
  csv::Row mask_header = header;
  header.push_back("outcome");
  header.push_back("weight");
  out.data += csv::format_row(header);
  out.mask += csv::format_row(mask_header);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    csv::Row row{m.row_ids[static_cast<std::size_t>(r)]};
    csv::Row mask_row{m.row_ids[static_cast<std::size_t>(r)]};
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(m.missing(r, c) ? std::string() : text::format_double(m.values(r, c)));
      mask_row.push_back(m.missing(r, c) ? "1" : "0");
    }
    row.push_back(std::isfinite(m.outcome(r)) ? text::format_double(m.outcome(r)) : std::string());
    row.push_back(text::format_double(m.weights(r)));
    out.data += csv::format_row(row);
    out.mask += csv::format_row(mask_row);
  }
  return out;
}

FeatureMatrix read_matrix_csv(std::string_view data, std::string_view mask) {
  const auto data_rows = csv::parse(data);
  const auto mask_rows = csv::parse(mask);
  if (data_rows.empty() || mask_rows.size() != data_rows.size()) {
    throw Error(ErrorCode::kFormatError, "matrix and mask row counts differ");
  }
  const auto& header = data_rows.front();
  if (header.size() < 3 || header.front() != "book_id" || header[header.size() - 2] != "outcome" ||
      header.back() != "weight") {
    throw Error(ErrorCode::kFormatError, "matrix.csv header must be book_id,<columns>,outcome,weight");
  }
  FeatureMatrix m;
  m.columns.assign(header.begin() + 1, header.end() - 2);
  m.column_kinds.assign(m.columns.size(), DimensionKind::kProportion);
  const auto n = static_cast<Eigen::Index>(data_rows.size() - 1);
  const auto p = static_cast<Eigen::Index>(m.columns.size());
  m.values = Eigen::MatrixXd::Zero(n, p);
  m.missing = MissingMask::Constant(n, p, false);
  m.outcome.resize(n);
  m.weights.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = data_rows[static_cast<std::size_t>(r + 1)];
    const auto& mrow = mask_rows[static_cast<std::size_t>(r + 1)];
    if (row.size() != header.size() || mrow.size() != static_cast<std::size_t>(p + 1)) {
      throw Error(ErrorCode::kFormatError, "ragged matrix row " + std::to_string(r + 2));
    }
    m.row_ids.push_back(row[0]);
    m.row_titles.push_back(row[0]);
    for (Eigen::Index c = 0; c < p; ++c) {
      const bool is_missing = mrow[static_cast<std::size_t>(c + 1)] == "1";
      m.missing(r, c) = is_missing;
      if (!is_missing) {
        const auto v = text::parse_double(row[static_cast<std::size_t>(c + 1)]);
        if (!v) throw Error(ErrorCode::kFormatError, "bad matrix cell at row " + std::to_string(r + 2));
        m.values(r, c) = *v;
      }
    }
    m.outcome(r) = text::parse_double(row[static_cast<std::size_t>(p + 1)]).value_or(std::nan(""));
    m.weights(r) = text::parse_double(row[static_cast<std::size_t>(p + 2)]).value_or(1.0);
  }
  m.refresh_zero_variance();
  return m;
}

}  // namespace isaac
