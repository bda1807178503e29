#pragma once

// Planted-signal corpus: a reader whose enjoyment is linear in a handful of
// annotation dimensions plus noise. Used where a known answer is needed for
// model comparison, learning curves, importance and curation masks.

#include <cmath>
#include <string>
#include <vector>

#include "isaac/core/matrix.hpp"
#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"
#include "isaac/ingest/ingest.hpp"
#include "isaac/util/rng.hpp"

namespace isaac::testing {

struct PlantedOptions {
  std::size_t n_books = 100;
  std::size_t n_dims = 40;
  std::size_t n_informative = 5;
  // Population share of enjoyment variance explained by the informative dims.
  double r2 = 0.5;
  // Correlation between the average-rating column and the planted signal.
  double avg_rating_link = 0.3;
  std::uint64_t seed = 20240917;
};

struct PlantedCorpus {
  AnnotationSchema schema;
  std::vector<RatedBook> books;
  std::vector<AnnotationRecord> records;
  std::vector<std::string> informative;
  FeatureMatrix matrix;
};

inline std::string planted_id(std::size_t k, std::size_t n_informative) {
  if (k < n_informative) return "signal_" + std::to_string(k + 1);
  const auto j = k - n_informative + 1;
  return std::string("noise_") + (j < 10 ? "0" : "") + std::to_string(j);
}

// Informative dims: binary with p = 0.5, except the last, which is a
// proportion. Noise dims: mostly binary with varying prevalence, every fifth a
// proportion, a few cells missing.
inline PlantedCorpus planted_corpus(const PlantedOptions& opt = {}) {
  Rng rng(opt.seed);
  PlantedCorpus c;
  std::vector<Dimension> dims;
  dims.push_back({"gr_avg_rating", "Goodreads average rating", DimensionGroup::kMetadata, DimensionKind::kStars,
                  DimensionSource::kGoodreadsMeta});
  std::vector<DimensionKind> kinds;
  std::vector<double> prevalence;
  for (std::size_t k = 0; k < opt.n_dims; ++k) {
    const bool informative = k < opt.n_informative;
    DimensionKind kind = DimensionKind::kBinary;
    if (informative ? k + 1 == opt.n_informative : (k % 5 == 4)) kind = DimensionKind::kProportion;
    kinds.push_back(kind);
    prevalence.push_back(informative ? 0.5 : 0.15 + 0.45 * rng.uniform01());
    const auto id = planted_id(k, opt.n_informative);
    if (informative) c.informative.push_back(id);
    dims.push_back({id, id, DimensionGroup::kCustom, kind, DimensionSource::kBackendSummary});
  }
  c.schema = AnnotationSchema(dims, 1);

  const std::size_t n = opt.n_books;
  std::vector<std::vector<double>> x(n, std::vector<double>(opt.n_dims));
  std::vector<double> signal(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < opt.n_dims; ++k) {
      if (kinds[k] == DimensionKind::kBinary) x[i][k] = rng.bernoulli(prevalence[k]) ? 1.0 : 0.0;
      else x[i][k] = std::round(rng.uniform01() * 100.0) / 100.0;
    }
    for (std::size_t k = 0; k < opt.n_informative; ++k) {
      // Each informative dim scaled to unit population variance.
      const double z = kinds[k] == DimensionKind::kBinary ? (x[i][k] - 0.5) / 0.5 : (x[i][k] - 0.5) / std::sqrt(1.0 / 12.0);
      signal[i] += z / std::sqrt(static_cast<double>(opt.n_informative));
    }
  }
  const double noise_sd = std::sqrt((1.0 - opt.r2) / opt.r2);
  std::vector<double> enjoyment(n);
  for (std::size_t i = 0; i < n; ++i) enjoyment[i] = signal[i] + noise_sd * rng.normal();

  for (std::size_t i = 0; i < n; ++i) {
    const std::string num = std::to_string(1000 + i).substr(1);
    const double raw = std::clamp(std::round(70.0 + 12.0 * enjoyment[i]), 0.0, 100.0);
    auto book = make_rated_book("Planted Novel " + num, "Author " + std::to_string(i % 13), raw);
    c.books.push_back(book);

    AnnotationRecord r;
    r.book_id = book.book_id;
    r.schema_version = c.schema.version();
    const double link = opt.avg_rating_link;
    const double avg = 3.9 + 0.3 * (link * signal[i] + std::sqrt(1.0 - link * link) * rng.normal());
    r.set("gr_avg_rating", std::clamp(std::round(avg * 100.0) / 100.0, 1.0, 5.0), Provenance::kMock);
    for (std::size_t k = 0; k < opt.n_dims; ++k) {
      const bool drop = k >= opt.n_informative && rng.bernoulli(0.02);
      r.set(planted_id(k, opt.n_informative), drop ? std::nullopt : std::optional<double>(x[i][k]), Provenance::kMock);
    }
    c.records.push_back(std::move(r));
  }
  // Raw ratings are rounded, so ties are resolved by average rank.
  ingest::apply_percentiles(c.books);
  c.matrix = encode_matrix(c.books, c.records, c.schema);
  return c;
}

}  // namespace isaac::testing
