#include <doctest.h>

#include <algorithm>

#include "isaac/agree/agree.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/rng.hpp"

using namespace isaac;
using namespace isaac::agree;

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

AnnotationSchema small_schema() {
  return AnnotationSchema({{"female_main", "Female main character", DimensionGroup::kMainCharacter},
                           {"tragic", "Tragic", DimensionGroup::kMood},
                           {"dark", "Dark", DimensionGroup::kMood, DimensionKind::kProportion}},
                          1);
}

std::string id(std::size_t i) { return "book" + std::to_string(1000 + i); }

// 98 books; AI and human agree on the first `agree` of them.
struct Pair {
  std::map<std::string, std::optional<double>> human;
  std::vector<AnnotationRecord> ai;
};

Pair agreeing(std::size_t agree, std::size_t n = 98) {
  Pair p;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = static_cast<double>(i % 2);
    p.human[id(i)] = h;
    AnnotationRecord r;
    r.book_id = id(i);
    r.set("female_main", i < agree ? h : 1.0 - h, Provenance::kWikipedia);
    p.ai.push_back(r);
  }
  return p;
}

}  // namespace

TEST_CASE("identical vectors agree fully") {
  const auto p = agreeing(98);
  const auto r = compare_annotations(p.human, p.ai, small_schema(), "female_main");
  CHECK(r.n_compared == 98);
  CHECK(r.n_agree == 98);
  CHECK(r.percent == 100);
  CHECK(r.kappa == doctest::Approx(1.0));
  CHECK(r.disagreements.empty());
}

TEST_CASE("agreement counts round to the reported percentages") {
  CHECK(compare_annotations(agreeing(94).human, agreeing(94).ai, small_schema(), "female_main").percent == 96);
  CHECK(compare_annotations(agreeing(87).human, agreeing(87).ai, small_schema(), "female_main").percent == 89);
  CHECK(compare_annotations(agreeing(81).human, agreeing(81).ai, small_schema(), "female_main").percent == 83);
  CHECK(compare_annotations(agreeing(49).human, agreeing(49).ai, small_schema(), "female_main").percent == 50);
  // Halves round up: 1 of 8 is 12.5%.
  CHECK(compare_annotations(agreeing(1, 8).human, agreeing(1, 8).ai, small_schema(), "female_main").percent == 13);
}

TEST_CASE("kappa matches a hand computation") {
  const std::vector<double> human = {1, 1, 0, 0, 1, 0, 1, 1, 0, 0};
  const std::vector<double> ai = {1, 0, 0, 0, 1, 0, 1, 1, 1, 0};
  std::map<std::string, std::optional<double>> h;
  std::vector<AnnotationRecord> recs;
  for (std::size_t i = 0; i < human.size(); ++i) {
    h[id(i)] = human[i];
    AnnotationRecord r;
    r.book_id = id(i);
    r.set("tragic", ai[i], Provenance::kGoodreads);
    recs.push_back(r);
  }
  const auto r = compare_annotations(h, recs, small_schema(), "tragic");
  CHECK(r.percent == 80);
  // po = 0.8, pe = 0.5*0.5 + 0.5*0.5 = 0.5.
  CHECK(*r.kappa == doctest::Approx(0.6).epsilon(1e-12));

  // One category on both sides: chance agreement is 1, kappa undefined.
  std::map<std::string, std::optional<double>> ones{{id(0), 1.0}, {id(1), 1.0}};
  std::vector<AnnotationRecord> ones_ai(2);
  for (int i = 0; i < 2; ++i) {
    ones_ai[i].book_id = id(i);
    ones_ai[i].set("tragic", 1.0, Provenance::kMock);
  }
  CHECK_FALSE(compare_annotations(ones, ones_ai, small_schema(), "tragic").kappa.has_value());
}

TEST_CASE("missing values are excluded and counted separately") {
  auto p = agreeing(90, 20);
  p.human[id(0)] = std::nullopt;
  p.ai[1].set("female_main", std::nullopt, Provenance::kWikipedia);
  p.human[id(2)] = std::nullopt;
  p.ai[2].set("female_main", std::nullopt, Provenance::kWikipedia);
  // Human-only and AI-only books are outside the overlap.
  p.human["human-only"] = 1.0;
  AnnotationRecord extra;
  extra.book_id = "ai-only";
  extra.set("female_main", 1.0, Provenance::kMock);
  p.ai.push_back(extra);

  const auto r = compare_annotations(p.human, p.ai, small_schema(), "female_main");
  CHECK(r.n_compared == 17);
  CHECK(r.n_excluded() == 3);
  CHECK(r.n_compared + r.n_excluded() == 20);
  std::vector<std::string> sides;
  for (const auto& e : r.not_compared) sides.push_back(e.side);
  CHECK(sides == std::vector<std::string>{"human", "ai", "both"});
}

TEST_CASE("agreement is symmetric and order-free") {
  Rng rng(31);
  const auto schema = small_schema();
  for (int trial = 0; trial < 25; ++trial) {
    std::map<std::string, std::optional<double>> h, a;
    std::vector<AnnotationRecord> hr, ar;
    for (std::size_t i = 0; i < 40; ++i) {
      const auto draw = [&]() -> std::optional<double> {
        if (rng.bernoulli(0.1)) return std::nullopt;
        return rng.bernoulli(0.4) ? 1.0 : 0.0;
      };
      h[id(i)] = draw();
      a[id(i)] = draw();
      AnnotationRecord x, y;
      x.book_id = y.book_id = id(i);
      x.set("tragic", a[id(i)], Provenance::kMock);
      y.set("tragic", h[id(i)], Provenance::kMock);
      ar.push_back(x);
      hr.push_back(y);
    }
    const auto forward = compare_annotations(h, ar, schema, "tragic");
    const auto swapped = compare_annotations(a, hr, schema, "tragic");
    CHECK(forward.percent == swapped.percent);
    CHECK(forward.n_compared == swapped.n_compared);
    rng.shuffle(ar.begin(), ar.end());
    const auto shuffled = compare_annotations(h, ar, schema, "tragic");
    CHECK(shuffled.percent == forward.percent);
    CHECK(shuffled.disagreements.size() == forward.disagreements.size());
  }
}

TEST_CASE("no overlap and unknown dimensions are errors") {
  auto p = agreeing(5, 5);
  std::map<std::string, std::optional<double>> other{{"elsewhere", 1.0}};
  CHECK(code_of([&] { compare_annotations(other, p.ai, small_schema(), "female_main"); }) == ErrorCode::kNoOverlap);
  CHECK(code_of([&] { compare_annotations(p.human, p.ai, small_schema(), "nope"); }) == ErrorCode::kUnknownDimension);
}

TEST_CASE("human csv accepts ids or title and author") {
  const auto schema = small_schema();
  const auto h = parse_human_csv(
      "book_id,title,author,dimension_id,value\n"
      "b1,,,female_main,yes\n"
      ",Dune,Frank Herbert,female_main,0\n"
      "b1,,,dark,40%\n"
      "b2,,,dark,MISSING\n",
      schema);
  CHECK(h.at("female_main").at("b1") == 1.0);
  CHECK(h.at("female_main").at(make_book_id("Dune", "Frank Herbert")) == 0.0);
  CHECK(h.at("dark").at("b1") == doctest::Approx(0.4));
  CHECK_FALSE(h.at("dark").at("b2").has_value());

  CHECK(code_of([&] { parse_human_csv("book_id,dimension_id,value\nb1,ghost,1\n", schema); }) ==
        ErrorCode::kUnknownDimension);
  CHECK(code_of([&] { parse_human_csv("book_id,dimension_id,value\nb1,female_main,often\n", schema); }) ==
        ErrorCode::kInvalidValue);
  CHECK(code_of([&] { parse_human_csv("book_id,dimension_id,value\nb1,tragic,1\nb1,tragic,0\n", schema); }) ==
        ErrorCode::kFormatError);
  CHECK(code_of([&] { parse_human_csv("book,value\nb1,1\n", schema); }) == ErrorCode::kFormatError);
}

TEST_CASE("the report lists disagreements by dimension then title") {
  const auto schema = small_schema();
  HumanAnnotations human;
  std::vector<AnnotationRecord> ai;
  std::map<std::string, std::string> titles;
  const std::vector<std::string> names = {"Zebra Days", "Apple Tree", "Moon Tide", "Cold River", "Lark", "Bell"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    titles[id(i)] = names[i];
    human["female_main"][id(i)] = 1.0;
    human["tragic"][id(i)] = 0.0;
    AnnotationRecord r;
    r.book_id = id(i);
    r.set("female_main", i < 4 ? 0.0 : 1.0, Provenance::kBoth);
    r.set("tragic", i == 5 ? std::nullopt : std::optional<double>(0.0), Provenance::kWikipedia);
    ai.push_back(r);
  }
  const auto results = compare_all(human, ai, schema, titles);
  REQUIRE(results.size() == 2);
  CHECK(results[0].disagreements.size() == 4);
  const auto report = disagreement_report(results);
  CHECK(report.find("| female_main | 6 | 2 | 33% |") != std::string::npos);
  const auto apple = report.find("| Apple Tree |");
  const auto cold = report.find("| Cold River |");
  const auto moon = report.find("| Moon Tide |");
  const auto zebra = report.find("| Zebra Days |");
  CHECK(apple < cold);
  CHECK(cold < moon);
  CHECK(moon < zebra);
  CHECK(report.find("| Apple Tree | " + id(1) + " | 1 | 0 | both |") != std::string::npos);
  CHECK(report.find("## female_main") < report.find("## tragic"));
  CHECK(report.find("no disagreements") > report.find("## tragic"));
  CHECK(report.find("- Bell (" + id(5) + "): missing on ai") != std::string::npos);

  const auto j = agreement_to_json(results[0]);
  CHECK(j["percent"] == 33);
  CHECK(j["disagreements"].size() == 4);
}
