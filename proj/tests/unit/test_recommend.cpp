#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

#include "isaac/recommend/recommend.hpp"
#include "isaac/util/error.hpp"
#include "support/builders.hpp"
#include "support/planted.hpp"

using namespace isaac;
using namespace isaac::recommend;
using isaac::testing::planted_corpus;
using isaac::testing::PlantedOptions;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected isaac::Error");
  return ErrorCode::kInvalidArgument;
}

Candidate copy_as_candidate(const AnnotationRecord& source, const std::string& title) {
  Candidate c;
  c.title = title;
  c.record = source;
  c.record.book_id = "cand-" + title;
  return c;
}

RecommendOptions ridge_only() {
  RecommendOptions o;
  o.model = predict::ModelKind::kRidge;
  return o;
}

}  // namespace

TEST_CASE("contribution is coefficient times standardized value") {
  const Eigen::VectorXd coef = (Eigen::VectorXd(3) << 0.1, 0.5, -0.3).finished();
  const Eigen::RowVectorXd design = (Eigen::RowVectorXd(3) << 2.0, 0.0, 0.0).finished();
  const auto e = explain(coef, design, {"a", "b", "c"});
  REQUIRE(e.size() == 3);
  CHECK(e[0].dimension_id == "a");
  CHECK(e[0].contribution == doctest::Approx(0.2));
  CHECK(e[1].contribution == 0.0);

  // A missing indicator folds into its dimension.
  const Eigen::VectorXd c2 = (Eigen::VectorXd(3) << 1.0, 2.0, -3.0).finished();
  const Eigen::RowVectorXd d2 = (Eigen::RowVectorXd(3) << 1.0, 1.0, 0.5).finished();
  const auto e2 = explain(c2, d2, {"a", "a__missing", "b"}, 5);
  REQUIRE(e2.size() == 2);
  CHECK(e2[0].dimension_id == "a");
  CHECK(e2[0].contribution == doctest::Approx(3.0));
  CHECK(e2[1].contribution == doctest::Approx(-1.5));

  CHECK(explain(c2, d2, {"a", "a__missing", "b"}, 1).size() == 1);
  CHECK(code_of([&] { explain(c2, d2, {"a", "b"}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("a candidate at the feature means gets zero contributions and the intercept") {
  Rng rng(8);
  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(30, 4, [&] { return rng.uniform01(); });
  Eigen::VectorXd y = x.col(0) * 0.7 - x.col(2) * 0.2;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.05 * rng.normal();
  const auto train = testing::make_matrix(testing::numbered_ids(4), x, y);
  predict::ModelSpec spec;
  spec.lambda = 0.5;
  const auto model = predict::fit_model(train, spec);

  const Eigen::RowVectorXd means = x.colwise().mean();
  const auto at_mean = testing::make_matrix(testing::numbered_ids(4), means, Eigen::VectorXd::Zero(1));
  for (const auto& c : explain(model, at_mean, 0)) CHECK(std::abs(c.contribution) < 1e-12);
  CHECK(model.predict(at_mean)(0) == doctest::Approx(model.ridge()->intercept).epsilon(1e-12));
}

TEST_CASE("ranking is unchanged by increasing transforms of the scores") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd s(12);
    std::vector<std::string> titles;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      s(i) = std::round(rng.normal() * 4) / 4;  // coarse, so ties occur
      titles.push_back("T" + std::to_string(rng.uniform_index(1000)));
    }
    const Eigen::VectorXd t = (s.array() * 3.0).exp() + 7.0;
    const auto full = rank_scores(t, titles, 12);
    CHECK(rank_scores(s, titles, 12) == full);
    CHECK(rank_scores(s, titles, 5) == std::vector<std::size_t>(full.begin(), full.begin() + 5));
  }
  const Eigen::VectorXd tied = Eigen::VectorXd::Constant(3, 0.5);
  // Byte order: upper case sorts before lower case.
  const std::vector<std::string> names = {"Cherry", "apple", "Banana"};
  CHECK(rank_scores(tied, names, 3) == std::vector<std::size_t>{2, 0, 1});
}

TEST_CASE("the twin of the top-rated book ranks first") {
  const auto c = planted_corpus();
  // Twins of the top-rated book and of the six lowest-rated ones.
  std::vector<std::size_t> order(c.books.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return *c.books[a].percentile < *c.books[b].percentile; });
  std::vector<Candidate> cands;
  cands.push_back(copy_as_candidate(c.records[order.back()], "Twin"));
  for (std::size_t i = 0; i < 6; ++i) cands.push_back(copy_as_candidate(c.records[order[i]], "Other " + std::to_string(i)));
  for (const auto kind : {predict::ModelKind::kRidge, predict::ModelKind::kRandomForest}) {
    RecommendOptions o;
    o.model = kind;
    o.forest.n_trees = 60;
    o.k = 3;
    const auto r = rank_candidates(cands, c.books, c.records, c.schema, {}, o);
    REQUIRE(r.items.size() == 3);
    CHECK(r.items[0].title == "Twin");
    CHECK(r.items[0].rank == 1);
    CHECK(r.items[2].rank == 3);
    CHECK(r.items[0].predicted >= r.items[1].predicted);
    CHECK(r.ranked_by == kind);
    CHECK(r.items[0].explanation.size() == 5);
    CHECK(r.note.empty() == (kind == predict::ModelKind::kRidge));
  }
}

TEST_CASE("explanations name the planted dimensions") {
  const auto c = planted_corpus();
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < 20; ++i) cands.push_back(copy_as_candidate(c.records[i * 5], "C" + std::to_string(i)));
  auto o = ridge_only();
  o.k = 20;
  const auto r = rank_candidates(cands, c.books, c.records, c.schema, {}, o);
  std::size_t planted_in_top5 = 0;
  std::size_t slots = 0;
  for (const auto& item : r.items) {
    for (const auto& e : item.explanation) {
      ++slots;
      planted_in_top5 += e.dimension_id.starts_with("signal_");
    }
  }
  // Five planted dims among 41 columns; by chance about 12% of slots.
  CHECK(slots == 100);
  CHECK(planted_in_top5 >= 60);
}

TEST_CASE("a masked dimension never reaches a fit or an explanation") {
  const auto c = planted_corpus();
  CurationMask mask;
  for (const auto& id : c.informative) mask.excluded[id] = "not a real preference";
  std::mutex mu;
  std::set<std::string> seen;
  const predict::FitHook hook = [&](const std::vector<std::string>& cols) {
    std::lock_guard lock(mu);
    seen.insert(cols.begin(), cols.end());
  };
  RecommendOptions o;
  o.cv.hook = &hook;
  o.forest.n_trees = 40;
  o.k = 8;
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < 8; ++i) cands.push_back(copy_as_candidate(c.records[i * 11], "C" + std::to_string(i)));
  const auto r = rank_candidates(cands, c.books, c.records, c.schema, mask, o);
  REQUIRE(r.ridge_r.has_value());
  CHECK_FALSE(seen.empty());
  for (const auto& id : c.informative) {
    CHECK(std::none_of(seen.begin(), seen.end(), [&](const std::string& col) { return col.starts_with(id); }));
    CHECK(std::find(r.columns.begin(), r.columns.end(), id) == r.columns.end());
    for (const auto& item : r.items) {
      for (const auto& e : item.explanation) CHECK(e.dimension_id != id);
    }
  }
  // Stored annotations are untouched by the mask.
  CHECK(c.records[0].value(c.informative[0]).has_value());
}

TEST_CASE("masking the only informative dimension lowers loocv r") {
  PlantedOptions opt;
  opt.n_informative = 1;
  opt.n_dims = 15;
  const auto c = planted_corpus(opt);
  predict::ModelSpec spec;
  const auto full = predict::loocv(c.matrix, spec).loocv.r;
  const auto masked = predict::loocv(c.matrix.without_columns({"signal_1"}), spec).loocv.r;
  REQUIRE(full.has_value());
  CHECK(masked.value_or(-1.0) < *full);
}

TEST_CASE("recommendation preconditions") {
  const auto c = planted_corpus();
  std::vector<Candidate> rated_one = {{"Already", c.records[3]}};
  CHECK(code_of([&] { rank_candidates(rated_one, c.books, c.records, c.schema, {}, ridge_only()); }) ==
        ErrorCode::kAlreadyRated);
  auto stale = copy_as_candidate(c.records[3], "Stale");
  stale.record.schema_version = 7;
  std::vector<Candidate> stale_list = {stale};
  CHECK(code_of([&] { rank_candidates(stale_list, c.books, c.records, c.schema, {}, ridge_only()); }) ==
        ErrorCode::kSchemaVersionMismatch);
  CHECK(code_of([&] { rank_candidates({}, {}, {}, c.schema, {}, ridge_only()); }) == ErrorCode::kNoModel);
  CurationMask bad;
  bad.excluded["ghost"] = "";
  CHECK(code_of([&] { rank_candidates({}, c.books, c.records, c.schema, bad, ridge_only()); }) ==
        ErrorCode::kUnknownDimension);
  CHECK(rank_candidates({}, c.books, c.records, c.schema, {}, ridge_only()).items.empty());
  CHECK(exploration_rank({}, c.books, c.records, c.schema, {}, ridge_only()).items.empty());
}

namespace {

// 60 books with two well-covered dimensions and one ("senior") known for
// only two books.
struct SparseCorpus {
  AnnotationSchema schema;
  std::vector<RatedBook> books;
  std::vector<AnnotationRecord> records;
};

SparseCorpus sparse_corpus() {
  SparseCorpus s;
  s.schema = AnnotationSchema({{"funny", "Funny"}, {"long", "Long", DimensionGroup::kCustom, DimensionKind::kProportion},
                               {"senior", "Senior main character"}},
                              1);
  Rng rng(404);
  for (std::size_t i = 0; i < 60; ++i) {
    const double funny = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double len = std::round(rng.uniform01() * 100) / 100;
    auto b = make_rated_book("Sparse " + std::to_string(100 + i), "Writer", 50 + 20 * funny - 10 * len + 8 * rng.normal());
    AnnotationRecord r;
    r.book_id = b.book_id;
    r.set("funny", funny, Provenance::kMock);
    r.set("long", len, Provenance::kMock);
    r.set("senior", i < 2 ? std::optional<double>(static_cast<double>(i)) : std::nullopt, Provenance::kMock);
    s.books.push_back(b);
    s.records.push_back(r);
  }
  ingest::apply_percentiles(s.books);
  return s;
}

Candidate sparse_candidate(const std::string& title, std::optional<double> senior) {
  Candidate c;
  c.title = title;
  c.record.book_id = "cand-" + title;
  c.record.set("funny", 1.0, Provenance::kMock);
  c.record.set("long", 0.4, Provenance::kMock);
  c.record.set("senior", senior, Provenance::kMock);
  return c;
}

}  // namespace

TEST_CASE("exploration prefers the book that informs a thin dimension") {
  const auto s = sparse_corpus();
  const std::vector<Candidate> cands = {sparse_candidate("Well Covered", std::nullopt),
                                        sparse_candidate("Old Hero", 1.0)};
  const auto r = exploration_rank(cands, s.books, s.records, s.schema, {}, ridge_only());
  REQUIRE(r.items.size() == 2);
  CHECK(r.items[0].title == "Old Hero");
  CHECK(r.items[0].mode == Mode::kExploration);
  CHECK(*r.items[0].informativeness > *r.items[1].informativeness);
  // The thin dimension goes from the prior's 0.8 to a data-driven width.
  CHECK(*r.items[0].informativeness > 0.01);
}

TEST_CASE("duplicate candidates are equally informative and ordered by title") {
  const auto s = sparse_corpus();
  const std::vector<Candidate> cands = {sparse_candidate("Beta", 1.0), sparse_candidate("Alpha", 1.0)};
  const auto r = exploration_rank(cands, s.books, s.records, s.schema, {}, ridge_only());
  REQUIRE(r.items.size() == 2);
  CHECK(r.items[0].title == "Alpha");
  CHECK(*r.items[0].informativeness == *r.items[1].informativeness);
}

TEST_CASE("exploration gains are non-negative on the planted corpus") {
  const auto c = planted_corpus();
  // Hold out 30 books as candidates.
  std::vector<RatedBook> rated(c.books.begin(), c.books.begin() + 70);
  std::vector<AnnotationRecord> records(c.records.begin(), c.records.begin() + 70);
  ingest::apply_percentiles(rated);
  std::vector<Candidate> cands;
  for (std::size_t i = 70; i < 100; ++i) cands.push_back({c.books[i].title, c.records[i]});
  auto o = ridge_only();
  o.k = 30;
  const auto r = exploration_rank(cands, rated, records, c.schema, {}, o);
  REQUIRE(r.items.size() == 30);
  std::size_t non_negative = 0;
  for (const auto& item : r.items) non_negative += *item.informativeness >= -1e-6;
  CHECK(non_negative >= 27);
  for (std::size_t i = 1; i < r.items.size(); ++i) CHECK(*r.items[i - 1].informativeness >= *r.items[i].informativeness);
}

TEST_CASE("candidate lists read title and author and ignore ratings") {
  const auto books = parse_candidates("Title,Author,My Rating\nDune,Frank Herbert,0\n\"Emma\",Jane Austen,\nDune,Frank Herbert,3\n");
  REQUIRE(books.size() == 2);
  CHECK(books[0].book_id == make_book_id("Dune", "Frank Herbert"));
  CHECK(books[1].title == "Emma");
  CHECK(code_of([] { parse_candidates("title\nDune\n"); }) == ErrorCode::kFormatError);
  CHECK(code_of([] { parse_candidates("title,author\nDune,\n"); }) == ErrorCode::kFormatError);
}

TEST_CASE("masks round-trip through json") {
  CurationMask m;
  m.excluded["genre_romance"] = "tired of it";
  m.excluded["lyrical"] = "";
  m.created_at = "2025-03-01T10:00:00Z";
  const auto back = mask_from_json(mask_to_json(m));
  CHECK(back.excluded == m.excluded);
  CHECK(back.created_at == m.created_at);
  CHECK(mask_from_json(nlohmann::json{{"excluded", {"a", "b"}}}).ids() == std::set<std::string>{"a", "b"});
}
