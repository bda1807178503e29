#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isaac/ingest/ingest.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/rng.hpp"

using namespace isaac;
using namespace isaac::ingest;

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

std::vector<double> raw_ratings(const std::vector<RatedBook>& books) {
  std::vector<double> v;
  for (const auto& b : books) v.push_back(b.raw_rating);
  return v;
}

}  // namespace

TEST_CASE("simple csv rows keep their raw ratings") {
  const auto result = parse_ratings_text("title,author,rating\nDune,Frank Herbert,91\nEmma,Jane Austen,40\nUlysses,James Joyce,12.5\n");
  REQUIRE(result.books.size() == 3);
  CHECK(result.format == RatingsFormat::kSimpleCsv);
  CHECK(raw_ratings(result.books) == std::vector<double>{91, 40, 12.5});
  CHECK(result.books[0].title == "Dune");
  CHECK(result.books[0].book_id == make_book_id("dune", "frank herbert"));
  CHECK(result.warnings.empty());
}

TEST_CASE("simple csv optional flags") {
  const auto result = parse_ratings_text(
      "title,author,rating,dnf,hypothetical,media_type\n"
      "\"Gravity's Rainbow, Vol 1\",Thomas Pynchon,5,yes,0,book\n"
      "Alien,Ridley Scott,80,0,0,movie\n"
      "Middlemarch,George Eliot,unrated,,,\n");
  REQUIRE(result.books.size() == 2);
  CHECK(result.books[0].title == "Gravity's Rainbow, Vol 1");
  CHECK(result.books[0].dnf);
  CHECK(result.books[1].media_type == MediaType::kMovie);
  CHECK(result.warnings.size() == 1);
}

TEST_CASE("goodreads export") {
  const std::string text =
      "Book Id,Title,Author,Author l-f,ISBN,My Rating,Average Rating,Publisher,Number of Pages,Exclusive Shelf\n"
      "1,The Left Hand of Darkness,Ursula K. Le Guin,\"Le Guin, Ursula K.\",\"=\"\"0441478123\"\"\",5,4.09,Ace,304,read\n"
      "2,Piranesi,Susanna Clarke,\"Clarke, Susanna\",,0,4.23,Bloomsbury,272,to-read\n"
      "3,Beloved,Toni Morrison,\"Morrison, Toni\",,3,3.94,Vintage,324,read\n";
  const auto result = parse_ratings_text(text);
  CHECK(result.format == RatingsFormat::kGoodreadsCsv);
  REQUIRE(result.books.size() == 2);
  CHECK(raw_ratings(result.books) == std::vector<double>{100, 60});
  CHECK(result.books[0].export_avg_rating == doctest::Approx(4.09));
  CHECK(result.books[1].export_num_pages == doctest::Approx(324));
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("Piranesi") != std::string::npos);
}

TEST_CASE("ratings parse errors") {
  CHECK(code_of([] { parse_ratings_text("title,author\nDune,Frank Herbert\n"); }) == ErrorCode::kFormatError);
  CHECK(code_of([] { parse_ratings_text(""); }) == ErrorCode::kEmptyFile);
  CHECK(code_of([] { parse_ratings_text("title,author,rating\n"); }) == ErrorCode::kEmptyFile);
  CHECK(code_of([] { parse_ratings_text("title,author,rating\nA,B,120\n"); }) == ErrorCode::kFormatError);
  CHECK(code_of([] { parse_ratings_text("Title,Author,My Rating\nA,B,seven\n"); }) == ErrorCode::kFormatError);
}

TEST_CASE("simple csv parse -> serialize -> parse is lossless") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<RatedBook> books;
    const auto n = 1 + rng.uniform_index(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      auto b = make_rated_book("Title, \"" + std::to_string(trial) + "\" #" + std::to_string(i), "Auth " + std::to_string(i),
                               std::round(rng.uniform01() * 1000.0) / 10.0);
      b.dnf = rng.bernoulli(0.2);
      b.hypothetical = rng.bernoulli(0.2);
      b.media_type = rng.bernoulli(0.2) ? MediaType::kTv : MediaType::kBook;
      b.weight = rng.bernoulli(0.5) ? 1.0 : 0.5;
      if (rng.bernoulli(0.5)) b.journal_note = "loved it,\nthen hated it";
      if (rng.bernoulli(0.5)) b.export_avg_rating = 3.0 + std::round(rng.uniform01() * 200.0) / 100.0;
      if (rng.bernoulli(0.5)) b.export_num_pages = static_cast<double>(100 + rng.uniform_index(600));
      books.push_back(b);
    }
    apply_percentiles(books);
    const auto once = parse_ratings_text(write_simple_csv(books)).books;
    CHECK(once == books);
    CHECK(parse_ratings_text(write_simple_csv(once)).books == once);
  }
}

TEST_CASE("skewness") {
  CHECK(skewness(std::vector<double>{1, 2, 3}) == doctest::Approx(0.0));
  // m2 = 2/9, m3 = 2/27 -> g1 = (2/27) / (2/9)^1.5 = 1/sqrt(2)
  CHECK(skewness(std::vector<double>{0, 0, 1}) == doctest::Approx(0.70710678118654752).epsilon(1e-12));
  CHECK(code_of([] { skewness(std::vector<double>{1, 2}); }) == ErrorCode::kDegenerateSample);
  CHECK(code_of([] { skewness(std::vector<double>{4, 4, 4, 4}); }) == ErrorCode::kDegenerateSample);

  SUBCASE("estimator variants against scipy on the committed fixture") {
    const auto books = parse_ratings_export(ISAAC_FIXTURE_DIR "/ratings_98.csv").books;
    const auto raw = raw_ratings(books);
    // scipy.stats.skew(r) and scipy.stats.skew(r, bias=False)
    CHECK(skewness(raw, SkewnessEstimator::kG1) == doctest::Approx(-1.3897882570621876).epsilon(1e-10));
    CHECK(skewness(raw, SkewnessEstimator::kAdjustedG1) == doctest::Approx(-1.411485138250332).epsilon(1e-10));
  }

  SUBCASE("antisymmetry") {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x(3 + rng.uniform_index(40));
      for (auto& v : x) v = std::exp(rng.normal());
      std::vector<double> neg(x.size());
      std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
      for (auto est : {SkewnessEstimator::kG1, SkewnessEstimator::kAdjustedG1, SkewnessEstimator::kB1}) {
        CHECK(skewness(neg, est) == doctest::Approx(-skewness(x, est)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("percentile rank") {
  const auto pr = percentile_rank(std::vector<double>{10, 20, 30});
  CHECK(pr[0] == doctest::Approx(1.0 / 6.0));
  CHECK(pr[1] == doctest::Approx(0.5));
  CHECK(pr[2] == doctest::Approx(5.0 / 6.0));
  CHECK(percentile_rank(std::vector<double>{50, 50, 50, 50}) == std::vector<double>{0.5, 0.5, 0.5, 0.5});
  const auto ties = percentile_rank(std::vector<double>{1, 2, 2, 3});
  CHECK(ties == std::vector<double>{0.125, 0.5, 0.5, 0.875});
  CHECK(percentile_rank(std::vector<double>{42}) == std::vector<double>{0.5});

  SUBCASE("tie-free mean is exactly one half and output lies in (0,1)") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> x(1 + rng.uniform_index(200));
      std::iota(x.begin(), x.end(), 0.0);
      rng.shuffle(x.begin(), x.end());
      const auto p = percentile_rank(x);
      // Sum of (i - 0.5) over i = 1..n is n^2 / 2, exactly representable here.
      const double sum = std::accumulate(p.begin(), p.end(), 0.0) * static_cast<double>(x.size());
      CHECK(sum / static_cast<double>(x.size() * x.size()) == doctest::Approx(0.5).epsilon(1e-15));
      for (double v : p) CHECK((v > 0.0 && v < 1.0));
    }
  }

  SUBCASE("invariant under strictly monotone maps") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> x(2 + rng.uniform_index(60));
      for (auto& v : x) v = std::round(rng.normal() * 5.0);  // ties included
      const double a = 0.1 + rng.uniform01() * 3.0;
      const double b = rng.normal() * 10.0;
      std::vector<double> y(x.size());
      std::transform(x.begin(), x.end(), y.begin(), [&](double v) { return std::exp(a * v / 10.0) + b; });
      CHECK(percentile_rank(x) == percentile_rank(y));
    }
  }
}

TEST_CASE("percentile transform removes the skew of the committed fixture") {
  const auto books = parse_ratings_export(ISAAC_FIXTURE_DIR "/ratings_98.csv").books;
  const auto raw = raw_ratings(books);
  REQUIRE(skewness(raw) <= -1.0);
  const auto pr = percentile_rank(raw);
  CHECK(std::abs(skewness(pr)) <= 0.15);
}

TEST_CASE("dnf policies") {
  std::vector<RatedBook> books{make_rated_book("A", "x", 90), make_rated_book("B", "x", 30),
                               make_rated_book("C", "x", 50)};
  books[2].dnf = true;
  CHECK(apply_dnf_policy(books, DnfPolicy::kInclude).size() == 3);
  CHECK(apply_dnf_policy(books, DnfPolicy::kExclude).size() == 2);
  const auto floored = apply_dnf_policy(books, DnfPolicy::kImputeFloor);
  CHECK(floored[2].raw_rating == 30);
  CHECK(parse_dnf_policy("impute-floor") == DnfPolicy::kImputeFloor);
}

TEST_CASE("journal notes") {
  std::vector<RatedBook> books{make_rated_book("Dune", "Frank Herbert", 90), make_rated_book("Emma", "Jane Austen", 40)};
  SUBCASE("note for an existing book is attached") {
    const auto notes = parse_journal_notes_text("book,note\nDune|Frank Herbert,\"gave up halfway, characters flat\"\n", books);
    CHECK(notes.notes.size() == 1);
    CHECK(books[0].journal_note == "gave up halfway, characters flat");
    CHECK(notes.unmatched.empty());
  }
  SUBCASE("unknown titles are reported") {
    const auto notes = parse_journal_notes_text("book,note\nEmma,fine\nNeuromancer|William Gibson,wow\n", books);
    CHECK(notes.notes.size() == 1);
    CHECK(books[1].journal_note == "fine");
    CHECK(notes.unmatched == std::vector<std::string>{"Neuromancer|William Gibson"});
  }
  SUBCASE("empty file") {
    CHECK(parse_journal_notes_text("", books).notes.empty());
  }
  SUBCASE("three-column variant") {
    const auto notes = parse_journal_notes_text("title,author,note\nEmma,Jane Austen,slow\n", books);
    CHECK(notes.notes.at(books[1].book_id) == "slow");
  }
  SUBCASE("bad header") {
    CHECK(code_of([&] { parse_journal_notes_text("a,b\nx,y\n", books); }) == ErrorCode::kFormatError);
  }
}

TEST_CASE("merging cross-media ratings") {
  std::vector<RatedBook> books;
  for (int i = 0; i < 10; ++i) books.push_back(make_rated_book("Book " + std::to_string(i), "A", 10.0 * i));
  apply_percentiles(books);

  SUBCASE("no extras leaves the list unchanged") {
    const auto merged = merge_media_ratings(books, {}, 0.5);
    CHECK(merged == books);
    for (const auto& b : merged) CHECK(b.weight == 1.0);
  }
  SUBCASE("movies are appended with their weight and percentiles recomputed") {
    std::vector<RatedBook> movies;
    for (int i = 0; i < 5; ++i) {
      auto m = make_rated_book("Movie " + std::to_string(i), "Director", 5.0 + 20.0 * i);
      m.media_type = MediaType::kMovie;
      movies.push_back(m);
    }
    const auto merged = merge_media_ratings(books, movies, 0.5);
    REQUIRE(merged.size() == 15);
    for (std::size_t i = 0; i < 10; ++i) CHECK(merged[i].weight == 1.0);
    for (std::size_t i = 10; i < 15; ++i) CHECK(merged[i].weight == 0.5);
    std::vector<double> raw;
    for (const auto& b : merged) raw.push_back(b.raw_rating);
    const auto expected = percentile_rank(raw);
    for (std::size_t i = 0; i < merged.size(); ++i) CHECK(merged[i].percentile == expected[i]);
  }
  SUBCASE("hypothetical book ratings are accepted") {
    auto h = make_rated_book("Unread", "Someone", 70);
    h.hypothetical = true;
    CHECK(merge_media_ratings(books, {h}, 0.3).back().weight == 0.3);
  }
  SUBCASE("unflagged extra") {
    std::vector<RatedBook> two(books.begin(), books.begin() + 2);
    CHECK(code_of([&] { merge_media_ratings(two, {make_rated_book("X", "Y", 50)}, 0.5); }) ==
          ErrorCode::kUnflaggedExtra);
  }
}
