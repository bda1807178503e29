#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "isaac/core/matrix.hpp"
#include "isaac/core/schema.hpp"
#include "isaac/util/error.hpp"
#include "support/builders.hpp"

using namespace isaac;

namespace {

std::size_t count_group(const AnnotationSchema& s, DimensionGroup g) { return s.by_group(g).size(); }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected isaac::Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("default schema carries the full annotation table") {
  const auto s = default_schema();
  const Dimension* avg = s.find("gr_avg_rating");
  REQUIRE(avg != nullptr);
  CHECK(avg->kind == DimensionKind::kStars);
  CHECK(avg->source == DimensionSource::kGoodreadsMeta);

  CHECK(count_group(s, DimensionGroup::kCommentMention) == 13);
  CHECK(count_group(s, DimensionGroup::kMetadata) == 3 + 12);
  CHECK(count_group(s, DimensionGroup::kTargetGroup) == 10);
  CHECK(count_group(s, DimensionGroup::kStyle) == 8);
  CHECK(count_group(s, DimensionGroup::kMood) == 10);
  CHECK(count_group(s, DimensionGroup::kMainCharacter) == 8);
  CHECK(count_group(s, DimensionGroup::kTheme) == 14);
  CHECK(count_group(s, DimensionGroup::kCharacterGoal) == 15);
  CHECK(count_group(s, DimensionGroup::kStruggleAgainst) == 7);
  CHECK(count_group(s, DimensionGroup::kJournalNote) == 13);
  for (const auto* d : s.by_group(DimensionGroup::kCommentMention)) CHECK(d->kind == DimensionKind::kProportion);
  for (const auto& d : s.dimensions()) CHECK(is_valid_dimension_id(d.id));
  CHECK(s.version() == 1);
  CHECK(default_schema() == s);
}

TEST_CASE("extend_schema appends custom dimensions") {
  const auto base = default_schema();
  SUBCASE("one new binary dimension") {
    const auto ext = extend_schema(base, {{"queer_main_character", "Queer main character", DimensionGroup::kTheme,
                                           DimensionKind::kBinary, DimensionSource::kBackendSummary}});
    CHECK(ext.version() == 2);
    CHECK(ext.dimensions().size() == base.dimensions().size() + 1);
    CHECK(ext.dimensions().back().id == "queer_main_character");
    CHECK(ext.dimensions().back().group == DimensionGroup::kCustom);
    // Existing dimensions untouched.
    CHECK(std::equal(base.dimensions().begin(), base.dimensions().end(), ext.dimensions().begin()));
  }
  SUBCASE("empty extension") {
    const auto ext = extend_schema(base, {});
    CHECK(ext == base);
    CHECK(ext.version() == 1);
  }
  SUBCASE("duplicate id") {
    CHECK(code_of([&] { extend_schema(base, {{"gr_avg_rating", "", {}, DimensionKind::kStars, {}}}); }) ==
          ErrorCode::kDuplicateDimension);
  }
  SUBCASE("malformed id") {
    CHECK(code_of([&] { extend_schema(base, {{"Booker Prize", "", {}, DimensionKind::kBinary, {}}}); }) ==
          ErrorCode::kInvalidId);
  }
}

TEST_CASE("schema json round-trips for random extensions") {
  Rng rng(7);
  const DimensionKind kinds[] = {DimensionKind::kBinary, DimensionKind::kProportion, DimensionKind::kCount,
                                 DimensionKind::kStars};
  for (int trial = 0; trial < 25; ++trial) {
    auto schema = default_schema();
    const auto rounds = rng.uniform_index(4);
    for (std::uint64_t r = 0; r < rounds; ++r) {
      std::vector<Dimension> dims;
      const auto count = rng.uniform_index(4);
      for (std::uint64_t k = 0; k < count; ++k) {
        dims.push_back({"custom_" + std::to_string(trial) + "_" + std::to_string(r) + "_" + std::to_string(k),
                        "Label \"" + std::to_string(k) + "\"", DimensionGroup::kCustom,
                        kinds[rng.uniform_index(4)], DimensionSource::kUser});
      }
      schema = extend_schema(schema, dims);
    }
    const auto text = schema_to_json(schema).dump();
    CHECK(schema_from_json(nlohmann::json::parse(text)) == schema);
  }
}

TEST_CASE("genre strings map onto the controlled list") {
  const std::vector<std::string> genres{"Science Fiction", "Dystopia", "Crime", "Poetry"};
  const auto ids = genre_dimension_ids(genres);
  CHECK(ids == std::vector<std::string>{"genre_mystery_crime", "genre_scifi"});
}

TEST_CASE("encode_matrix shapes and masking") {
  const auto schema = default_schema();
  Rng rng(11);
  const auto eligible = modeling_columns(schema, {});
  CHECK(eligible.size() == 100);

  SUBCASE("98 books give 98 rows and the eligible column count") {
    auto books = testing::numbered_books(98, rng);
    std::vector<AnnotationRecord> records;
    for (const auto& b : books) records.push_back(testing::random_record(b.book_id, schema, rng));
    const auto m = encode_matrix(books, records, schema);
    CHECK(m.rows() == 98);
    CHECK(m.cols() == static_cast<Eigen::Index>(eligible.size()));
    CHECK(m.outcome.size() == 98);
  }
  SUBCASE("one fully annotated book") {
    auto books = testing::numbered_books(1, rng);
    const auto m = encode_matrix(books, std::vector{testing::random_record(books[0].book_id, schema, rng)}, schema);
    CHECK(m.rows() == 1);
    CHECK(m.missing_count() == 0);
  }
  SUBCASE("missing num_pages is masked and the row retained") {
    auto books = testing::numbered_books(3, rng);
    std::vector<AnnotationRecord> records;
    for (const auto& b : books) records.push_back(testing::random_record(b.book_id, schema, rng));
    records[1].values.erase("num_pages");
    const auto m = encode_matrix(books, records, schema);
    const auto col = *m.column_index("num_pages");
    CHECK(m.rows() == 3);
    CHECK(m.missing(1, col));
    CHECK_FALSE(m.missing(0, col));
    CHECK(m.missing_count() == 1);
  }
  SUBCASE("a zero value is not missing") {
    auto books = testing::numbered_books(1, rng);
    auto rec = testing::random_record(books[0].book_id, schema, rng);
    rec.set("theme_war", 0.0, Provenance::kMock);
    const auto m = encode_matrix(books, std::vector{rec}, schema);
    CHECK_FALSE(m.missing(0, *m.column_index("theme_war")));
  }
  SUBCASE("errors") {
    auto books = testing::numbered_books(2, rng);
    std::vector<AnnotationRecord> one{testing::random_record(books[0].book_id, schema, rng)};
    CHECK(code_of([&] { encode_matrix(books, one, schema); }) == ErrorCode::kMissingRecord);
    CHECK(code_of([&] { encode_matrix(std::vector<RatedBook>{}, one, schema); }) == ErrorCode::kEmptyCorpus);
  }
}

TEST_CASE("journal-note columns only appear when opted in") {
  const auto schema = default_schema();
  Rng rng(5);
  auto books = testing::numbered_books(4, rng);
  std::vector<AnnotationRecord> records;
  for (const auto& b : books) records.push_back(testing::random_record(b.book_id, schema, rng));
  const auto plain = encode_matrix(books, records, schema);
  for (const auto& c : plain.columns) CHECK(c.rfind("journal_", 0) != 0);
  const auto with_journal = encode_matrix(books, records, schema, {.include_journal = true});
  CHECK(with_journal.cols() == plain.cols() + 13);
}

TEST_CASE("zero-variance columns are flagged, not dropped") {
  const auto schema = default_schema();
  Rng rng(3);
  auto books = testing::numbered_books(6, rng);
  std::vector<AnnotationRecord> records;
  for (const auto& b : books) {
    auto r = testing::random_record(b.book_id, schema, rng);
    r.set("theme_magic", 1.0, Provenance::kMock);
    records.push_back(r);
  }
  const auto m = encode_matrix(books, records, schema);
  const auto col = *m.column_index("theme_magic");
  CHECK(m.zero_variance[static_cast<std::size_t>(col)]);
  CHECK_FALSE(m.zero_variance[static_cast<std::size_t>(*m.column_index("gr_avg_rating"))]);
}

TEST_CASE("encode_matrix is permutation-equivariant") {
  const auto schema = default_schema();
  Rng rng(21);
  auto books = testing::numbered_books(30, rng);
  std::vector<AnnotationRecord> records;
  for (const auto& b : books) records.push_back(testing::random_record(b.book_id, schema, rng));
  const auto base = encode_matrix(books, records, schema);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> perm(books.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<RatedBook> shuffled;
    for (auto i : perm) shuffled.push_back(books[i]);
    auto shuffled_records = records;
    rng.shuffle(shuffled_records.begin(), shuffled_records.end());
    const auto m = encode_matrix(shuffled, shuffled_records, schema);
    REQUIRE(m.columns == base.columns);
    for (std::size_t r = 0; r < perm.size(); ++r) {
      const auto src = static_cast<Eigen::Index>(perm[r]);
      const auto dst = static_cast<Eigen::Index>(r);
      CHECK(m.row_ids[r] == base.row_ids[perm[r]]);
      CHECK((m.values.row(dst).array() == base.values.row(src).array()).all());
      CHECK((m.missing.row(dst) == base.missing.row(src)).all());
      CHECK(m.outcome(dst) == base.outcome(src));
    }
  }
}

TEST_CASE("emitted values always satisfy their kind's range") {
  const auto schema = default_schema();
  Rng rng(99);
  auto books = testing::numbered_books(40, rng);
  std::vector<AnnotationRecord> records;
  for (const auto& b : books) {
    AnnotationRecord r;
    r.book_id = b.book_id;
    for (const auto& d : schema.dimensions()) {
      const double roll = rng.uniform01();
      if (roll < 0.1) continue;
      if (roll < 0.3) r.values[d.id] = rng.normal() * 10.0;  // garbage
      else r.values[d.id] = testing::random_value(d.kind, rng);
    }
    records.push_back(r);
  }
  const auto m = encode_matrix(books, records, schema);
  CHECK(m.invalid_cells > 0);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const auto kind = m.column_kinds[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (!m.missing(r, c)) CHECK(value_in_range(kind, m.values(r, c)));
    }
  }
}

TEST_CASE("matrix csv export round-trips") {
  const auto schema = default_schema();
  Rng rng(8);
  auto books = testing::numbered_books(5, rng);
  std::vector<AnnotationRecord> records;
  for (const auto& b : books) records.push_back(testing::random_record(b.book_id, schema, rng));
  records[2].values["mood_dark"] = std::nullopt;
  const auto m = encode_matrix(books, records, schema);
  const auto files = write_matrix_csv(m);
  CHECK(files.data.rfind("book_id,gr_avg_rating,", 0) == 0);
  const auto back = read_matrix_csv(files.data, files.mask);
  CHECK(back.columns == m.columns);
  CHECK(back.row_ids == m.row_ids);
  CHECK((back.values.array() == m.values.array()).all());
  CHECK((back.missing == m.missing).all());
  CHECK((back.outcome.array() == m.outcome.array()).all());
}

TEST_CASE("book ids are stable under case and whitespace") {
  CHECK(make_book_id("The Hobbit", "J.R.R. Tolkien") == make_book_id("  the   hobbit ", "j.r.r. tolkien"));
  CHECK(make_book_id("The Hobbit", "J.R.R. Tolkien") != make_book_id("The Hobbit", "Someone Else"));
  CHECK(make_book_id("A", "B").size() == 16);
}
