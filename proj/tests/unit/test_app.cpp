#include <doctest.h>

#include <filesystem>
#include <thread>

#include "isaac/annotate/mock_backend.hpp"
#include "isaac/app/config.hpp"
#include "isaac/app/project.hpp"
#include "isaac/app/service.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "support/planted.hpp"
#include "support/temp_dir.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

using namespace isaac;
using namespace isaac::app;
using isaac::testing::TempDir;
namespace fsys = std::filesystem;

namespace {

const fsys::path kFixtures(ISAAC_FIXTURE_DIR);

// Planted corpus as a project: the last `n_candidates` books become unrated
// candidates that keep their records.
ProjectState planted_state(std::size_t n_candidates = 5) {
  const auto c = isaac::testing::planted_corpus();
  ProjectState s;
  s.seed = 7;
  s.schema = c.schema;
  s.books.assign(c.books.begin(), c.books.end() - static_cast<std::ptrdiff_t>(n_candidates));
  ingest::apply_percentiles(s.books);
  for (auto it = c.books.end() - static_cast<std::ptrdiff_t>(n_candidates); it != c.books.end(); ++it) {
    s.candidates.push_back(make_rated_book(it->title, it->author, 0.0));
  }
  s.records = c.records;
  std::sort(s.records.begin(), s.records.end(), [](const auto& a, const auto& b) { return a.book_id < b.book_id; });
  return s;
}

Workspace planted_workspace(const fsys::path& root) {
  save_project(root, planted_state());
  return Workspace::open(root);
}

std::map<std::string, std::string> read_all(const fsys::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fsys::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != ".lock") out[e.path().filename().string()] = fs::read_file(e.path());
  }
  return out;
}

ExpectationSet expect(std::initializer_list<std::pair<const char*, int>> signs) {
  ExpectationSet s;
  for (const auto& [id, sign] : signs) s.items[id] = Expectation{sign, std::nullopt};
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an isaac::Error");
  return ErrorCode::kInvalidArgument;
}

struct HookReset {
  ~HookReset() { fs::set_write_hook(nullptr); }
};

}  // namespace

TEST_CASE("a fresh project has the documented layout") {
  TempDir dir;
  auto w = Workspace::create(dir.path(), default_schema(), 42);
  for (const char* f : {"project.json", "schema.json", "ratings.csv", "records.jsonl", "events.log"}) {
    CHECK_MESSAGE(fsys::exists(dir / f), f);
  }
  CHECK(w.state().events.empty());
  CHECK(code_of([&] { Workspace::create(dir.path(), default_schema(), 42); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("save and load round-trip the whole state") {
  TempDir dir;
  auto s = planted_state();
  s.expectations = expect({{"signal_1", 1}, {"noise_01", -1}});
  s.expectations.registered_at_ms = 1700000000000;
  s.mask.excluded["noise_02"] = "not about the book";
  s.mask.created_at = "2026-01-01T00:00:00Z";
  s.run_report = {{"annotated", 95}};
  s.events.push_back({1, 1700000000000, std::string(event::kExpectationsRegistered), {{"post_hoc", false}}});
  s.events.push_back({2, 1700000000005, std::string(event::kEffectsViewed), nlohmann::json::object()});
  s.books[0].journal_note = "loved the ending, \"truly\"";
  save_project(dir.path(), s);
  const auto loaded = load_project(dir.path());
  CHECK(loaded == s);

  SUBCASE("save after load is byte-identical") {
    const auto before = read_all(dir.path());
    save_project(dir.path(), loaded);
    CHECK(read_all(dir.path()) == before);
    TempDir other;
    save_project(other.path(), loaded);
    CHECK(read_all(other.path()) == before);
  }
}

TEST_CASE("a truncated records file names the bad line") {
  TempDir dir;
  save_project(dir.path(), planted_state());
  const auto path = dir / "records.jsonl";
  auto data = fs::read_file(path);
  // Cut the 17th line in half and drop everything after it.
  std::size_t pos = 0;
  for (int i = 0; i < 16; ++i) pos = data.find('\n', pos) + 1;
  data.resize(pos + 20);
  fs::atomic_write(path, data);
  try {
    load_project(dir.path());
    FAIL("expected CorruptProject");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCorruptProject);
    CHECK(std::string(e.what()).find("line 17") != std::string::npos);
  }
}

TEST_CASE("checksum mismatch and newer formats are refused") {
  TempDir dir;
  save_project(dir.path(), planted_state());
  SUBCASE("edited file") {
    auto csv = fs::read_file(dir / "ratings.csv");
    csv.back() = ' ';
    fs::atomic_write(dir / "ratings.csv", csv);
    CHECK(code_of([&] { load_project(dir.path()); }) == ErrorCode::kCorruptProject);
  }
  SUBCASE("newer version") {
    auto m = nlohmann::json::parse(fs::read_file(dir / "project.json"));
    m["version"] = kProjectFormatVersion + 1;
    fs::atomic_write(dir / "project.json", m.dump());
    CHECK(code_of([&] { load_project(dir.path()); }) == ErrorCode::kVersionTooNew);
  }
  SUBCASE("events out of order") {
    fs::append_line(dir / "events.log", R"({"seq":1,"ts":5,"type":"mask_changed","payload":{}})");
    fs::append_line(dir / "events.log", R"({"seq":2,"ts":5,"type":"mask_changed","payload":{}})");
    CHECK(code_of([&] { load_project(dir.path()); }) == ErrorCode::kCorruptProject);
  }
}

TEST_CASE("a crash between any two writes leaves a loadable project") {
  HookReset reset;
  TempDir probe;
  const auto before = planted_state();
  auto after = before;
  after.mask.excluded["signal_1"] = "";
  after.expectations = expect({{"signal_2", 1}});
  after.books[3].journal_note = "reread";
  after.events.push_back({1, 10, std::string(event::kMaskChanged), nlohmann::json::object()});
  after.events.push_back({2, 11, std::string(event::kExpectationsRegistered), nlohmann::json::object()});

  // Count the writes one save performs.
  save_project(probe.path(), before);
  int writes = 0;
  fs::set_write_hook([&](const fsys::path&) { ++writes; });
  save_project(probe.path(), after);
  fs::set_write_hook(nullptr);
  REQUIRE(writes >= 6);

  for (int crash_at = 1; crash_at <= writes; ++crash_at) {
    CAPTURE(crash_at);
    TempDir dir;
    save_project(dir.path(), before);
    int n = 0;
    fs::set_write_hook([&](const fsys::path&) {
      if (++n == crash_at) throw std::runtime_error("simulated crash");
    });
    CHECK_THROWS(save_project(dir.path(), after));
    fs::set_write_hook(nullptr);
    ProjectState loaded;
    REQUIRE_NOTHROW(loaded = load_project(dir.path()));
    auto without_events = [](ProjectState s) {
      s.events.clear();
      return s;
    };
    // Data files are all-or-nothing; the log may hold a prefix of the new events.
    const bool old_data = without_events(loaded) == without_events(before);
    const bool new_data = without_events(loaded) == without_events(after);
    CHECK((old_data || new_data));
    CHECK(loaded.events.size() <= after.events.size());
    CHECK(std::equal(loaded.events.begin(), loaded.events.end(), after.events.begin()));
    // And the next save completes normally.
    save_project(dir.path(), after);
    CHECK(load_project(dir.path()) == after);
  }
}

TEST_CASE("the project lock admits one writer") {
  TempDir dir;
  auto w = Workspace::create(dir.path(), default_schema(), 1);
  CHECK(code_of([&] { Workspace::open(dir.path()); }) == ErrorCode::kIoError);
}

TEST_CASE("events are appended with consecutive seq and increasing time") {
  TempDir dir;
  auto w = Workspace::create(dir.path(), default_schema(), 1);
  w.set_clock([] { return std::int64_t{1000}; });
  w.log_event(event::kMaskChanged, {});
  w.log_event(event::kMaskChanged, {});
  w.log_event(event::kMaskChanged, {});
  REQUIRE(w.state().events.size() == 3);
  CHECK(w.state().events[2].seq == 3);
  CHECK(w.state().events[0].ts_ms == 1000);
  CHECK(w.state().events[2].ts_ms == 1002);
  // The log on disk is complete even without a commit.
  w.commit();
  CHECK(load_project(dir.path()).events == w.state().events);
}

TEST_CASE("a torn final event line is dropped on open") {
  TempDir dir;
  {
    auto w = Workspace::create(dir.path(), default_schema(), 1);
    w.log_event(event::kMaskChanged, {});
  }
  auto log = fs::read_file(dir / "events.log");
  fs::atomic_write(dir / "events.log", log + R"({"seq":2,"ts":)");
  auto w = Workspace::open(dir.path());
  CHECK(w.state().events.size() == 1);
  w.log_event(event::kMaskChanged, {});
  CHECK(load_project(dir.path()).events.size() == 2);
}

TEST_CASE("expectations register before viewing and lock afterwards") {
  TempDir dir;
  auto w = planted_workspace(dir.path());
  const auto& stored = w.register_expectations(expect({{"signal_1", 1}}), false);
  CHECK_FALSE(stored.locked);
  CHECK_FALSE(stored.post_hoc);
  CHECK(stored.registered_at_ms > 0);
  CHECK(code_of([&] { w.register_expectations(expect({{"no_such_dim", 1}}), false); }) ==
        ErrorCode::kUnknownDimension);

  const auto table = w.view_effects(3);
  CHECK(table.has_expectations);
  CHECK_FALSE(table.expectations_post_hoc);
  CHECK(w.state().expectations.locked);
  CHECK(code_of([&] { w.register_expectations(expect({{"signal_1", -1}}), false); }) ==
        ErrorCode::kExpectationsLocked);
  CHECK(w.state().expectations.items.at("signal_1").sign == 1);

  const auto& late = w.register_expectations(expect({{"signal_1", -1}}), true);
  CHECK(late.post_hoc);
  const auto table2 = w.view_effects(3);
  CHECK(table2.expectations_post_hoc);
  CHECK(stats::effects_csv(table2).find("post-hoc") != std::string::npos);
  // Post-hoc stays post-hoc.
  const auto reopened = load_project(dir.path());
  CHECK(reopened.expectations.post_hoc);
}

TEST_CASE("every interleaving of register, view, register respects the lock") {
  // The three distinct orders of {register, view, register}, each with the
  // second registration flagged post-hoc or not.
  enum Op { kRegister, kView };
  const std::vector<std::vector<Op>> orders = {
      {kRegister, kRegister, kView}, {kRegister, kView, kRegister}, {kView, kRegister, kRegister}};
  for (const auto& order : orders) {
    for (const bool flag_second : {false, true}) {
      for (const bool flag_first : {false, true}) {
        TempDir dir;
        auto w = planted_workspace(dir.path());
        bool viewed = false;
        bool stored = false;
        int registers = 0;
        for (const Op op : order) {
          if (op == kView) {
            w.view_effects(3);
            viewed = true;
            continue;
          }
          const bool flag = registers++ == 0 ? flag_first : flag_second;
          const auto attempt = [&] { w.register_expectations(expect({{"signal_1", registers == 1 ? 1 : -1}}), flag); };
          if (viewed && !flag) {
            CHECK(code_of(attempt) == ErrorCode::kExpectationsLocked);
          } else {
            CHECK_NOTHROW(attempt());
            CHECK(w.state().expectations.post_hoc == viewed);
            stored = true;
          }
        }
        // Replaying the persisted log alone gives the same lock state.
        const auto replayed = replay_lock(load_project(dir.path()).events);
        CHECK(replayed == w.lock_state());
        CHECK(replayed.locked);
        CHECK(replayed.has_expectations == stored);
        CHECK(replayed.post_hoc == w.state().expectations.post_hoc);
      }
    }
  }
}

TEST_CASE("mask changes are logged and reach recommendations") {
  TempDir dir;
  auto w = planted_workspace(dir.path());
  recommend::CurationMask mask;
  mask.excluded["signal_1"] = "plot twist I knew about";
  w.set_mask(mask);
  CHECK_FALSE(w.state().mask.created_at.empty());
  CHECK(w.state().events.back().type == event::kMaskChanged);
  CHECK(code_of([&] {
          recommend::CurationMask bad;
          bad.excluded["nope"] = "";
          w.set_mask(bad);
        }) == ErrorCode::kUnknownDimension);

  recommend::RecommendOptions opts;
  opts.model = predict::ModelKind::kRidge;
  opts.cv.nested = false;
  const auto result = w.recommend(recommend::Mode::kEnjoyment, opts);
  CHECK(result.items.size() == 5);
  for (const auto& c : result.columns) CHECK(c.find("signal_1") == std::string::npos);
  for (const auto& item : result.items) {
    for (const auto& e : item.explanation) CHECK(e.dimension_id != "signal_1");
  }
  const auto& ev = w.state().events.back();
  CHECK(ev.type == event::kRecommendationsGenerated);
  CHECK(ev.payload.at("excluded") == nlohmann::json::array({"signal_1"}));
}

TEST_CASE("annotation through the workspace resumes after an interruption") {
  TempDir dir;
  auto w = Workspace::create(dir.path(), default_schema(), 42);
  w.ingest_ratings(fs::read_file(kFixtures / "ratings_98.csv"), ingest::RatingsFormat::kAuto,
                   ingest::DnfPolicy::kInclude);
  CHECK(w.state().books.size() == 98);
  auto backend = annotate::MockBackend::from_file(kFixtures / "mock_corpus.json");

  annotate::RunOptions first;
  first.max_books = 40;
  const auto partial = w.annotate(backend, first);
  CHECK_FALSE(partial.complete);
  CHECK(fsys::exists(dir / "annotations.partial.jsonl"));

  const auto rest = w.annotate(backend, {});
  CHECK(rest.complete);
  CHECK(rest.cached == 40);
  CHECK(rest.annotated == 58);
  CHECK(w.state().records.size() == 98);
  CHECK_FALSE(fsys::exists(dir / "annotations.partial.jsonl"));

  // Same records as a single uninterrupted run.
  TempDir other;
  auto w2 = Workspace::create(other.path(), default_schema(), 42);
  w2.ingest_ratings(fs::read_file(kFixtures / "ratings_98.csv"), ingest::RatingsFormat::kAuto,
                    ingest::DnfPolicy::kInclude);
  w2.annotate(backend, {});
  CHECK(fs::read_file(dir / "records.jsonl") == fs::read_file(other / "records.jsonl"));
}

TEST_CASE("model evaluation is stored and reused by recommendations") {
  TempDir dir;
  auto w = planted_workspace(dir.path());
  ModelEvalOptions opts;
  opts.cv.nested = false;
  opts.forest.n_trees = 50;
  const auto& report = w.evaluate_models(opts);
  CHECK(report.at("models").contains("ridge"));
  CHECK(report.at("models").contains("random_forest"));
  CHECK(report.at("models").contains("baseline_avg_rating"));
  const auto best = report.at("best").get<std::string>();
  CHECK(w.state().events.back().type == event::kModelsEvaluated);

  recommend::RecommendOptions ro;
  ro.cv.nested = false;
  const auto r = w.recommend(recommend::Mode::kEnjoyment, ro);
  CHECK(predict::to_string(r.ranked_by) == best);
}

TEST_CASE("config files parse and refuse keys") {
  const auto c = parse_config(R"(
# demo
[backend]
kind = http
endpoint = "https://example.test/v1"   # trailing comment
model = sonar
requests_per_minute = 10
[run]
workers = 4
seed = 9
)",
                              "/base");
  CHECK(c.backend == "http");
  CHECK(c.http.endpoint == "https://example.test/v1");
  CHECK(c.http.requests_per_minute == 10);
  CHECK(c.workers == 4);
  CHECK(c.seed == 9);
  CHECK(parse_config("[backend]\nmock_corpus = m.json\n", "/base").mock_corpus == fsys::path("/base/m.json"));
  CHECK(code_of([] { parse_config("[backend]\napi_key = sk-123\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[run]\nwrokers = 2\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[run]\nworkers = two\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("just words\n"); }) == ErrorCode::kFormatError);
}

// ---------------------------------------------------------------- service

namespace {

std::unique_ptr<Service> planted_service(const fsys::path& root) {
  Config config;
  config.min_n = 3;
  return std::make_unique<Service>(planted_workspace(root), nullptr, config);
}

nlohmann::json post_body(const nlohmann::json& j) { return j; }

}  // namespace

TEST_CASE("GET /api/effects returns the table and logs a view") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  const auto before = svc->snapshot()->at("events").size();
  const auto r = svc->handle("GET", "/api/effects", "");
  REQUIRE(r.status == 200);
  CHECK(r.body.at("rows").size() == 41);
  const auto& events = svc->snapshot()->at("events");
  CHECK(events.size() == before + 1);
  CHECK(events.back().at("type") == "effects_viewed");
  CHECK(svc->snapshot()->at("lock").at("locked") == true);
}

TEST_CASE("POST /api/expectations after a view is a 409 with a machine-readable code") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  const std::string body = post_body({{"expectations", {{"signal_1", {{"sign", "+"}}}}}}).dump();
  CHECK(svc->handle("POST", "/api/expectations", body).status == 200);
  CHECK(svc->handle("GET", "/api/effects", "").status == 200);
  const auto r = svc->handle("POST", "/api/expectations", body);
  CHECK(r.status == 409);
  CHECK(r.body.at("error").at("code") == "ExpectationsLocked");

  nlohmann::json flagged = nlohmann::json::parse(body);
  flagged["post_hoc"] = true;
  const auto ok = svc->handle("POST", "/api/expectations", flagged.dump());
  CHECK(ok.status == 200);
  CHECK(ok.body.at("post_hoc") == true);

  const auto conc = svc->handle("GET", "/api/concordance", "");
  CHECK(conc.status == 200);
  CHECK(conc.body.at("post_hoc") == true);
}

TEST_CASE("POST /api/mask then /api/recommend lists the exclusion") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  const auto m = svc->handle("POST", "/api/mask", R"({"excluded":[{"dimension_id":"signal_2","reason":"spoiler"}]})");
  REQUIRE(m.status == 200);
  const auto r = svc->handle("POST", "/api/recommend", R"({"k":3,"model":"ridge"})");
  REQUIRE(r.status == 200);
  CHECK(r.body.at("excluded") == nlohmann::json::array({"signal_2"}));
  CHECK(r.body.at("items").size() == 3);
  for (const auto& c : r.body.at("columns")) CHECK(c.get<std::string>().find("signal_2") == std::string::npos);

  const auto e = svc->handle("POST", "/api/explore", R"({"k":2,"model":"ridge"})");
  REQUIRE(e.status == 200);
  CHECK(e.body.at("mode") == "exploration");
  CHECK(e.body.at("items")[0].contains("informativeness"));
}

TEST_CASE("mutations replay under the same idempotency key") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  const std::string body = R"({"expectations":{"signal_1":{"sign":1}}})";
  const auto a = svc->handle("POST", "/api/expectations", body, {}, "key-1");
  const auto events = svc->snapshot()->at("events").size();
  CHECK(svc->handle("GET", "/api/effects", "", {}, "key-2").status == 200);
  // A retry after the lock still sees the original success, and logs nothing.
  const auto b = svc->handle("POST", "/api/expectations", body, {}, "key-1");
  CHECK(b.status == a.status);
  CHECK(b.body == a.body);
  CHECK(svc->handle("GET", "/api/effects", "", {}, "key-2").status == 200);
  CHECK(svc->snapshot()->at("events").size() == events + 1);
  CHECK(svc->handle("POST", "/api/mask", R"({"excluded":[]})", {}, "key-1").status == 422);
}

TEST_CASE("service errors map to statuses") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  CHECK(svc->handle("GET", "/api/nothing", "").status == 404);
  CHECK(svc->handle("POST", "/api/mask", "not json").status == 400);
  CHECK(svc->handle("POST", "/api/mask", R"({"excluded":["zzz"]})").body.at("error").at("code") ==
        "UnknownDimension");
  CHECK(svc->handle("POST", "/api/annotate", "{}").status == 503);
  CHECK(svc->handle("GET", "/api/concordance", "").body.at("error").at("code") == "NothingComparable");
  CHECK(svc->handle("GET", "/api/effects", "", {{"min_n", "zero"}}).status == 400);
  const auto p = svc->handle("GET", "/api/project", "");
  CHECK(p.status == 200);
  CHECK(p.body.at("books").size() == 95);
  CHECK(p.body.at("candidates").size() == 5);
}

TEST_CASE("ratings and model report over the service") {
  TempDir dir;
  auto svc = std::make_unique<Service>(Workspace::create(dir.path(), default_schema(), 3),
                                       std::make_unique<annotate::MockBackend>(
                                           nlohmann::json::parse(fs::read_file(kFixtures / "mock_corpus.json"))));
  CHECK(svc->handle("GET", "/api/model-report", "").status == 404);
  nlohmann::json req{{"text", fs::read_file(kFixtures / "ratings_98.csv")}, {"dnf", "include"}};
  const auto r = svc->handle("POST", "/api/ratings", req.dump());
  REQUIRE(r.status == 200);
  CHECK(r.body.at("books") == 98);
  const auto a = svc->handle("POST", "/api/annotate", R"({"workers":2})");
  REQUIRE(a.status == 200);
  CHECK(a.body.at("annotated") == 98);
  CHECK(svc->snapshot()->at("annotated").size() == 98);
}

TEST_CASE("the HTTP transport serves the API and reports bind failures") {
  TempDir dir;
  auto svc = planted_service(dir.path());
  const int port = svc->bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread server([&] { svc->run(); });

  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 50 && !(res = client.Get("/api/project")); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body).at("format_version") == kProjectFormatVersion);

  httplib::Headers headers{{"Idempotency-Key", "abc"}};
  auto m1 = client.Post("/api/mask", headers, R"({"excluded":["noise_03"]})", "application/json");
  auto m2 = client.Post("/api/mask", headers, R"({"excluded":["noise_03"]})", "application/json");
  REQUIRE(m1);
  REQUIRE(m2);
  CHECK(m1->body == m2->body);

  TempDir other;
  auto second = planted_service(other.path());
  CHECK(code_of([&] { second->bind("127.0.0.1", port); }) == ErrorCode::kBindError);

  svc->stop();
  server.join();
}
