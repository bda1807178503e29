#include "isaac/app/project.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>

#include "isaac/annotate/prompts.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/text.hpp"

namespace isaac::app {
namespace {

namespace fsys = std::filesystem;

constexpr std::string_view kManifest = "project.json";
constexpr std::string_view kEvents = "events.log";
constexpr std::string_view kPartial = "annotations.partial.jsonl";

// Checksummed files in commit order.
const std::vector<std::string>& data_files() {
  static const std::vector<std::string> files = {"schema.json",       "ratings.csv", "candidates.csv",
                                                 "records.jsonl",     "expectations.json", "mask.json",
                                                 "run_report.json",   "model_report.json"};
  return files;
}

std::string checksum(std::string_view content) { return text::hex64(text::fnv1a64(content)); }

std::string books_csv(const std::vector<RatedBook>& books) {
  return books.empty() ? std::string() : ingest::write_simple_csv(books);
}

std::vector<RatedBook> books_from_csv(const std::string& content) {
  if (text::trim(content).empty()) return {};
  return ingest::parse_ratings_text(content, ingest::RatingsFormat::kSimpleCsv).books;
}

std::map<std::string, std::string> serialize(const ProjectState& s) {
  std::map<std::string, std::string> out;
  out["schema.json"] = schema_to_json(s.schema).dump(2) + "\n";
  out["ratings.csv"] = books_csv(s.books);
  out["candidates.csv"] = books_csv(s.candidates);
  std::string records;
  for (const auto& r : s.records) records += record_to_json(r).dump() + "\n";
  out["records.jsonl"] = records;
  out["expectations.json"] = expectations_to_json(s.expectations).dump(2) + "\n";
  out["mask.json"] = recommend::mask_to_json(s.mask).dump(2) + "\n";
  out["run_report.json"] = s.run_report.dump(2) + "\n";
  out["model_report.json"] = s.model_report.dump(2) + "\n";
  return out;
}

[[noreturn]] void corrupt(const std::string& file, const std::string& what) {
  throw Error(ErrorCode::kCorruptProject, file + ": " + what);
}

nlohmann::json parse_json_file(const std::string& file, const std::string& content) {
  auto j = nlohmann::json::parse(content, nullptr, false);
  if (j.is_discarded()) corrupt(file, "not valid JSON");
  return j;
}

std::vector<AnnotationRecord> parse_records(const std::string& content) {
  std::vector<AnnotationRecord> out;
  const auto lines = text::split(content, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) corrupt("records.jsonl", "line " + std::to_string(i + 1) + " is truncated or not valid JSON");
    try {
      out.push_back(record_from_json(j));
    } catch (const std::exception& e) {
      corrupt("records.jsonl", "line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

struct EventFile {
  std::vector<Event> events;
  bool torn_tail = false;
};

EventFile read_events(const fsys::path& path) {
  EventFile out;
  if (!fsys::exists(path)) return out;
  const auto lines = text::split(fs::read_file(path), '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() && i + 1 == lines.size()) break;
    const auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      // Only an unfinished final append may be damaged.
      if (i + 1 == lines.size()) {
        out.torn_tail = true;
        break;
      }
      corrupt("events.log", "line " + std::to_string(i + 1) + " is not valid JSON");
    }
    Event e;
    try {
      e = event_from_json(j);
    } catch (const std::exception& ex) {
      corrupt("events.log", "line " + std::to_string(i + 1) + ": " + ex.what());
    }
    if (e.seq != static_cast<std::int64_t>(out.events.size()) + 1) {
      corrupt("events.log", "line " + std::to_string(i + 1) + " is out of sequence");
    }
    if (!out.events.empty() && e.ts_ms <= out.events.back().ts_ms) {
      corrupt("events.log", "line " + std::to_string(i + 1) + " does not advance the timestamp");
    }
    out.events.push_back(std::move(e));
  }
  return out;
}

std::string events_text(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) out += event_to_json(e).dump() + "\n";
  return out;
}

std::int64_t system_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string iso_time(std::int64_t ms) {
  const std::time_t secs = static_cast<std::time_t>(ms / 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::json event_to_json(const Event& e) {
  return {{"seq", e.seq}, {"ts", e.ts_ms}, {"type", e.type}, {"payload", e.payload}};
}

Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.seq = j.at("seq").get<std::int64_t>();
  e.ts_ms = j.at("ts").get<std::int64_t>();
  e.type = j.at("type").get<std::string>();
  e.payload = j.value("payload", nlohmann::json::object());
  return e;
}

LockState replay_lock(const std::vector<Event>& events) {
  LockState s;
  for (const auto& e : events) {
    if (e.type == event::kEffectsViewed) {
      s.locked = true;
      ++s.effects_views;
    } else if (e.type == event::kExpectationsRegistered) {
      s.has_expectations = true;
      s.post_hoc = e.payload.value("post_hoc", false);
    }
  }
  return s;
}

bool is_project(const fsys::path& root) { return fsys::exists(root / kManifest); }

void save_project(const fsys::path& root, const ProjectState& state) {
  fsys::create_directories(root);
  const auto files = serialize(state);

  // Events are append-only: the state must extend what is on disk.
  const auto on_disk = read_events(root / kEvents);
  if (on_disk.events.size() > state.events.size() ||
      !std::equal(on_disk.events.begin(), on_disk.events.end(), state.events.begin())) {
    throw Error(ErrorCode::kInvalidArgument, "event log on disk has diverged from the project being saved");
  }

  std::map<std::string, std::string> previous;
  if (is_project(root)) {
    const auto m = nlohmann::json::parse(fs::read_file(root / kManifest), nullptr, false);
    if (!m.is_discarded() && m.contains("files")) previous = m.at("files").get<std::map<std::string, std::string>>();
  }

  nlohmann::json manifest{{"format", "isaac-project"}, {"version", kProjectFormatVersion}, {"seed", state.seed}};
  std::vector<std::string> staged;
  for (const auto& name : data_files()) {
    const auto& content = files.at(name);
    const auto sum = checksum(content);
    manifest["files"][name] = sum;
    const auto it = previous.find(name);
    if (it != previous.end() && it->second == sum && fsys::exists(root / name)) continue;
    fs::write_staged(root / name, content);
    staged.push_back(name);
  }
  fs::atomic_write(root / kManifest, manifest.dump(2) + "\n");
  for (const auto& name : staged) fs::commit_staged(root / name);

  if (on_disk.torn_tail) fs::atomic_write(root / kEvents, events_text(on_disk.events));
  if (!fsys::exists(root / kEvents)) fs::atomic_write(root / kEvents, "");
  for (std::size_t i = on_disk.events.size(); i < state.events.size(); ++i) {
    fs::append_line(root / kEvents, event_to_json(state.events[i]).dump());
  }
}

ProjectState load_project(const fsys::path& root) {
  if (!is_project(root)) throw Error(ErrorCode::kIoError, "no project at " + root.string());
  const auto manifest = parse_json_file(std::string(kManifest), fs::read_file(root / kManifest));
  if (manifest.value("format", "") != "isaac-project") corrupt(std::string(kManifest), "not an isaac project manifest");
  const int version = manifest.value("version", 0);
  if (version > kProjectFormatVersion) {
    throw Error(ErrorCode::kVersionTooNew, "project format " + std::to_string(version) + " is newer than supported (" +
                                               std::to_string(kProjectFormatVersion) + ")");
  }
  const auto sums = manifest.at("files").get<std::map<std::string, std::string>>();

  std::map<std::string, std::string> content;
  for (const auto& name : data_files()) {
    const auto it = sums.find(name);
    if (it == sums.end()) corrupt(std::string(kManifest), "no checksum for " + name);
    const auto path = root / name;
    auto staged = path;
    staged += ".tmp";
    std::string data = fsys::exists(path) ? fs::read_file(path) : std::string();
    if (checksum(data) != it->second) {
      // An interrupted commit: the manifest already names the staged file.
      if (fsys::exists(staged) && checksum(fs::read_file(staged)) == it->second) {
        fs::commit_staged(path);
        data = fs::read_file(path);
      } else {
        if (name == "records.jsonl") parse_records(data);
        corrupt(name, fsys::exists(path) ? "checksum mismatch" : "missing");
      }
    }
    content[name] = std::move(data);
  }

  ProjectState s;
  s.seed = manifest.value("seed", std::uint64_t{42});
  try {
    s.schema = schema_from_json(parse_json_file("schema.json", content["schema.json"]));
    s.books = books_from_csv(content["ratings.csv"]);
    s.candidates = books_from_csv(content["candidates.csv"]);
    s.records = parse_records(content["records.jsonl"]);
    s.expectations = expectations_from_json(parse_json_file("expectations.json", content["expectations.json"]));
    s.mask = recommend::mask_from_json(parse_json_file("mask.json", content["mask.json"]));
    s.run_report = parse_json_file("run_report.json", content["run_report.json"]);
    s.model_report = parse_json_file("model_report.json", content["model_report.json"]);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptProject) throw;
    throw Error(ErrorCode::kCorruptProject, e.what());
  }
  s.events = read_events(root / kEvents).events;
  return s;
}

ProjectLock::ProjectLock(const fsys::path& root) {
  const auto path = root / ".lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kIoError, "project " + root.string() + " is in use by another process");
  }
}

ProjectLock::~ProjectLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

Workspace::Workspace(fsys::path root, ProjectState state)
    : root_(std::move(root)), state_(std::move(state)), now_(system_now_ms) {}

Workspace Workspace::create(const fsys::path& root, const AnnotationSchema& schema, std::uint64_t seed) {
  if (is_project(root)) throw Error(ErrorCode::kInvalidArgument, root.string() + " already holds a project");
  fsys::create_directories(root);
  auto lock = std::make_unique<ProjectLock>(root);
  ProjectState s;
  s.schema = schema;
  s.seed = seed;
  save_project(root, s);
  Workspace w(root, std::move(s));
  w.lock_ = std::move(lock);
  return w;
}

Workspace Workspace::open(const fsys::path& root) {
  if (!is_project(root)) throw Error(ErrorCode::kIoError, "no project at " + root.string());
  auto lock = std::make_unique<ProjectLock>(root);
  Workspace w(root, load_project(root));
  w.lock_ = std::move(lock);
  // Drop a torn event line left by a crash so later appends start clean.
  if (read_events(root / kEvents).torn_tail) fs::atomic_write(root / kEvents, events_text(w.state_.events));
  return w;
}

const Event& Workspace::log_event(std::string_view type, nlohmann::json payload) {
  Event e;
  e.seq = static_cast<std::int64_t>(state_.events.size()) + 1;
  e.ts_ms = now_();
  if (!state_.events.empty()) e.ts_ms = std::max(e.ts_ms, state_.events.back().ts_ms + 1);
  e.type = std::string(type);
  e.payload = std::move(payload);
  fs::append_line(root_ / kEvents, event_to_json(e).dump());
  state_.events.push_back(std::move(e));
  return state_.events.back();
}

void Workspace::commit() { save_project(root_, state_); }

ingest::ParseResult Workspace::ingest_ratings(std::string_view data, ingest::RatingsFormat format, ingest::DnfPolicy dnf,
                                              bool candidates) {
  if (candidates) {
    ingest::ParseResult r;
    r.books = recommend::parse_candidates(data);
    state_.candidates = r.books;
    log_event(event::kRatingsIngested, {{"candidates", state_.candidates.size()}});
    commit();
    return r;
  }
  auto r = ingest::parse_ratings_text(data, format);
  auto books = ingest::apply_dnf_policy(r.books, dnf);
  if (books.empty()) throw Error(ErrorCode::kEmptyCorpus, "no ratings left after the DNF policy");
  ingest::apply_percentiles(books);
  // Keep notes attached earlier to books that are still rated.
  for (auto& b : books) {
    const auto old = std::find_if(state_.books.begin(), state_.books.end(),
                                  [&](const RatedBook& o) { return o.book_id == b.book_id; });
    if (old != state_.books.end() && !b.journal_note) b.journal_note = old->journal_note;
  }
  state_.books = std::move(books);
  r.books = state_.books;
  log_event(event::kRatingsIngested, {{"books", state_.books.size()}, {"warnings", r.warnings.size()}});
  commit();
  return r;
}

ingest::JournalNotes Workspace::attach_notes(std::string_view data) {
  auto notes = ingest::parse_journal_notes_text(data, state_.books);
  commit();
  return notes;
}

annotate::RunReport Workspace::annotate(annotate::AnnotationBackend& backend, const annotate::RunOptions& options) {
  std::vector<RatedBook> all = state_.books;
  all.insert(all.end(), state_.candidates.begin(), state_.candidates.end());
  if (all.empty()) throw Error(ErrorCode::kEmptyCorpus, "no rated books or candidates to annotate");

  const auto partial = root_ / kPartial;
  annotate::RecordStore store(partial);
  if (!fsys::exists(partial)) {
    // Seed the journal with committed records so they count as cached.
    std::string seed;
    for (const auto& r : state_.records) {
      if (r.schema_version == state_.schema.version()) seed += record_to_json(r).dump() + "\n";
    }
    fs::atomic_write(partial, seed);
  }
  auto run = annotate::run_annotation(backend, all, state_.schema, &store, options);
  state_.records = std::move(run.records);
  state_.run_report = annotate::run_report_to_json(run.report);
  log_event(event::kAnnotationRun, {{"annotated", run.report.annotated},
                                    {"cached", run.report.cached},
                                    {"not_documented", run.report.not_documented},
                                    {"failed", run.report.failed},
                                    {"complete", run.report.complete},
                                    {"prompt_version", annotate::kPromptVersion},
                                    {"backend", backend.name()}});
  commit();
  if (run.report.complete) fsys::remove(partial);
  return run.report;
}

FeatureMatrix Workspace::matrix(bool include_journal) const {
  std::set<std::string> annotated;
  for (const auto& r : state_.records) {
    if (r.schema_version == state_.schema.version()) annotated.insert(r.book_id);
  }
  std::vector<RatedBook> books;
  for (const auto& b : state_.books) {
    if (annotated.count(b.book_id)) books.push_back(b);
  }
  if (books.empty()) throw Error(ErrorCode::kNoModel, "no rated book has an annotation record yet");
  EncodeOptions opts;
  opts.include_journal = include_journal;
  opts.excluded = state_.mask.ids();
  return encode_matrix(books, state_.records, state_.schema, opts);
}

stats::EffectTable Workspace::view_effects(std::size_t min_n) {
  // Introspection looks at every dimension; the mask only applies later.
  const auto saved = state_.mask;
  state_.mask = {};
  FeatureMatrix m;
  try {
    m = matrix(true);
  } catch (...) {
    state_.mask = saved;
    throw;
  }
  state_.mask = saved;
  const auto* expectations = state_.expectations.empty() ? nullptr : &state_.expectations;
  auto table = stats::effect_table(m, expectations, min_n);
  log_event(event::kEffectsViewed, {{"min_n", min_n}, {"dimensions", table.rows.size()}});
  if (!state_.expectations.locked) {
    state_.expectations.locked = true;
    commit();
  }
  return table;
}

stats::ConcordanceResult Workspace::concordance(std::size_t min_n) {
  if (state_.expectations.empty()) throw Error(ErrorCode::kNothingComparable, "no expectations registered");
  const auto table = view_effects(min_n);
  return stats::concordance(table.estimates(), state_.expectations);
}

const ExpectationSet& Workspace::register_expectations(ExpectationSet expectations, bool post_hoc) {
  for (const auto& [id, e] : expectations.items) {
    if (!state_.schema.contains(id)) throw Error(ErrorCode::kUnknownDimension, "expectation for unknown dimension " + id);
    if (e.sign < -1 || e.sign > 1) throw Error(ErrorCode::kInvalidValue, id + ": sign must be -1, 0 or +1");
    if (e.band && !(e.band->first >= -1.0 && e.band->first <= e.band->second && e.band->second <= 1.0)) {
      throw Error(ErrorCode::kInvalidValue, id + ": band must satisfy -1 <= lo <= hi <= 1");
    }
  }
  const auto lock = lock_state();
  if (lock.locked && !post_hoc) {
    throw Error(ErrorCode::kExpectationsLocked,
                "effects were already viewed; register again with the post-hoc flag to store these as post-hoc");
  }
  // The flag only permits a late registration; early ones are never post-hoc.
  expectations.post_hoc = lock.locked;
  expectations.locked = lock.locked;
  const auto& e = log_event(event::kExpectationsRegistered,
                            {{"post_hoc", expectations.post_hoc}, {"count", expectations.items.size()}});
  expectations.registered_at_ms = e.ts_ms;
  state_.expectations = std::move(expectations);
  commit();
  return state_.expectations;
}

const recommend::CurationMask& Workspace::set_mask(recommend::CurationMask mask) {
  recommend::validate_mask(mask, state_.schema);
  const auto& e = log_event(event::kMaskChanged, {{"excluded", mask.ids()}});
  if (mask.created_at.empty()) mask.created_at = iso_time(e.ts_ms);
  state_.mask = std::move(mask);
  commit();
  return state_.mask;
}

const nlohmann::json& Workspace::evaluate_models(const ModelEvalOptions& options) {
  const auto m = matrix(false);
  nlohmann::json models = nlohmann::json::object();
  std::optional<double> ridge_r, forest_r;
  predict::ModelReport best_report;
  for (const auto kind : {predict::ModelKind::kRidge, predict::ModelKind::kRandomForest,
                          predict::ModelKind::kBaselineAvgRating}) {
    predict::ModelSpec spec;
    spec.kind = kind;
    spec.forest = options.forest;
    try {
      auto report = predict::loocv(m, spec, options.cv);
      models[std::string(predict::to_string(kind))] = predict::report_to_json(report);
      if (kind == predict::ModelKind::kRidge) ridge_r = report.loocv.r;
      if (kind == predict::ModelKind::kRandomForest) forest_r = report.loocv.r;
    } catch (const Error& e) {
      models[std::string(predict::to_string(kind))] = {{"error", {{"code", code_name(e.code())}, {"message", e.what()}}}};
    }
  }
  const auto floor = [](const std::optional<double>& r) { return r.value_or(-2.0); };
  const auto best = floor(forest_r) > floor(ridge_r) ? predict::ModelKind::kRandomForest : predict::ModelKind::kRidge;
  nlohmann::json report{{"models", models},
                        {"best", predict::to_string(best)},
                        {"explained_by", "ridge"},
                        {"excluded", state_.mask.ids()},
                        {"n_books", m.rows()},
                        {"seed", options.cv.seed}};
  if (!options.curve_sizes.empty()) {
    predict::ModelSpec spec;
    spec.kind = best;
    spec.forest = options.forest;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : predict::learning_curve(m, spec, options.curve_sizes, options.curve_repeats, options.cv.seed,
                                                 options.cv)) {
      curve.push_back({{"m", p.m},
                       {"repeats", p.repeats},
                       {"mean_r", p.mean_r ? nlohmann::json(*p.mean_r) : nlohmann::json(nullptr)},
                       {"sd_r", p.sd_r},
                       {"undefined", p.undefined}});
    }
    report["learning_curve"] = curve;
  }
  state_.model_report = std::move(report);
  log_event(event::kModelsEvaluated, {{"best", predict::to_string(best)}, {"excluded", state_.mask.ids()}});
  commit();
  return state_.model_report;
}

recommend::RecommendResult Workspace::recommend(recommend::Mode mode, recommend::RecommendOptions options) {
  std::map<std::string, const AnnotationRecord*> by_id;
  for (const auto& r : state_.records) by_id[r.book_id] = &r;
  std::vector<recommend::Candidate> candidates;
  for (const auto& c : state_.candidates) {
    const auto it = by_id.find(c.book_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kMissingRecord, "candidate \"" + c.title + "\" is not annotated yet");
    }
    candidates.push_back({c.title, *it->second});
  }
  std::vector<RatedBook> rated;
  std::vector<AnnotationRecord> records;
  for (const auto& b : state_.books) {
    const auto it = by_id.find(b.book_id);
    if (it == by_id.end() || it->second->schema_version != state_.schema.version()) continue;
    rated.push_back(b);
    records.push_back(*it->second);
  }
  // Reuse the stored model comparison when it was made under the same mask.
  const auto& mr = state_.model_report;
  if (!options.model && mr.is_object() && mr.contains("best") &&
      mr.value("excluded", std::set<std::string>{}) == state_.mask.ids()) {
    options.model = predict::parse_model_kind(mr.at("best").get<std::string>());
  }
  auto result = mode == recommend::Mode::kEnjoyment
                    ? recommend::rank_candidates(candidates, rated, records, state_.schema, state_.mask, options)
                    : recommend::exploration_rank(candidates, rated, records, state_.schema, state_.mask, options);
  std::vector<std::string> ids;
  for (const auto& item : result.items) ids.push_back(item.book_id);
  log_event(event::kRecommendationsGenerated,
            {{"mode", recommend::to_string(mode)}, {"books", ids}, {"excluded", state_.mask.ids()}});
  return result;
}

}  // namespace isaac::app
