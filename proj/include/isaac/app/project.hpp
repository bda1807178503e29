#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "isaac/annotate/annotate.hpp"
#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"
#include "isaac/ingest/ingest.hpp"
#include "isaac/predict/evaluate.hpp"
#include "isaac/recommend/recommend.hpp"
#include "isaac/stats/effects.hpp"
#include "isaac/stats/expectations.hpp"

namespace isaac::app {

inline constexpr int kProjectFormatVersion = 1;

namespace event {
inline constexpr std::string_view kExpectationsRegistered = "expectations_registered";
inline constexpr std::string_view kEffectsViewed = "effects_viewed";
inline constexpr std::string_view kMaskChanged = "mask_changed";
inline constexpr std::string_view kRecommendationsGenerated = "recommendations_generated";
inline constexpr std::string_view kRatingsIngested = "ratings_ingested";
inline constexpr std::string_view kAnnotationRun = "annotation_run";
inline constexpr std::string_view kModelsEvaluated = "models_evaluated";
}  // namespace event

struct Event {
  std::int64_t seq = 0;  // 1, 2, 3, ...
  std::int64_t ts_ms = 0;  // strictly increasing
  std::string type;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const Event&, const Event&) = default;
};

nlohmann::json event_to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);

struct ProjectState {
  std::uint64_t seed = 42;
  AnnotationSchema schema;
  std::vector<RatedBook> books;
  std::vector<RatedBook> candidates;
  std::vector<AnnotationRecord> records;  // rated books and candidates, sorted by id
  ExpectationSet expectations;
  recommend::CurationMask mask;
  nlohmann::json run_report;     // null until the first annotation run
  nlohmann::json model_report;   // null until models are evaluated
  std::vector<Event> events;

  friend bool operator==(const ProjectState&, const ProjectState&) = default;
};

// What the event log says about expectations.
struct LockState {
  bool locked = false;            // effects have been viewed
  bool has_expectations = false;  // some registration succeeded
  bool post_hoc = false;          // the latest registration came after viewing
  std::size_t effects_views = 0;

  friend bool operator==(const LockState&, const LockState&) = default;
};

LockState replay_lock(const std::vector<Event>& events);

// Project directory layout:
//   project.json     manifest: format version, seed and a checksum per file
//   schema.json  ratings.csv  candidates.csv  records.jsonl
//   expectations.json  mask.json  run_report.json  model_report.json
//   events.log       append-only, one JSON event per line
//
// save_project stages every changed file as <name>.tmp, commits by
// rewriting the manifest, then renames the staged files into place.
// load_project finishes an interrupted commit from the staged files, so a
// crash between any two writes leaves a loadable project.
void save_project(const std::filesystem::path& root, const ProjectState& state);

// CorruptProject for checksum mismatches and unreadable lines (named by line
// number); VersionTooNew for a newer manifest.
ProjectState load_project(const std::filesystem::path& root);

bool is_project(const std::filesystem::path& root);

// Exclusive advisory lock on <root>/.lock for the life of the object.
class ProjectLock {
 public:
  explicit ProjectLock(const std::filesystem::path& root);
  ~ProjectLock();
  ProjectLock(const ProjectLock&) = delete;
  ProjectLock& operator=(const ProjectLock&) = delete;

 private:
  int fd_ = -1;
};

struct ModelEvalOptions {
  predict::CvOptions cv;
  predict::ForestParams forest;
  // Learning-curve sizes for the best model; empty skips the curve.
  std::vector<std::size_t> curve_sizes;
  std::size_t curve_repeats = 20;
};

// A loaded project plus the operations that change it. Every mutation is
// committed to disk before returning and, where the pipeline calls for it,
// logged as an event.
class Workspace {
 public:
  using NowFn = std::function<std::int64_t()>;

  static Workspace create(const std::filesystem::path& root, const AnnotationSchema& schema, std::uint64_t seed);
  static Workspace open(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const ProjectState& state() const { return state_; }
  LockState lock_state() const { return replay_lock(state_.events); }
  // Test hook for event timestamps (milliseconds since the epoch).
  void set_clock(NowFn now) { now_ = std::move(now); }

  const Event& log_event(std::string_view type, nlohmann::json payload);
  void commit();

  // Replaces the rated books (or the candidate list) and recomputes
  // percentiles.
  ingest::ParseResult ingest_ratings(std::string_view text, ingest::RatingsFormat format, ingest::DnfPolicy dnf,
                                     bool candidates = false);
  ingest::JournalNotes attach_notes(std::string_view text);

  // Annotates rated books and candidates. Progress is journaled to
  // annotations.partial.jsonl so an interrupted run resumes.
  annotate::RunReport annotate(annotate::AnnotationBackend& backend, const annotate::RunOptions& options);

  // Computing effects counts as viewing them: logs effects_viewed, which
  // locks the expectation set.
  stats::EffectTable view_effects(std::size_t min_n);
  stats::ConcordanceResult concordance(std::size_t min_n);

  // ExpectationsLocked after effects were viewed unless post_hoc is set;
  // UnknownDimension for ids outside the schema.
  const ExpectationSet& register_expectations(ExpectationSet expectations, bool post_hoc);

  const recommend::CurationMask& set_mask(recommend::CurationMask mask);

  const nlohmann::json& evaluate_models(const ModelEvalOptions& options);

  recommend::RecommendResult recommend(recommend::Mode mode, recommend::RecommendOptions options);

  // Encoded rated books with the mask applied.
  FeatureMatrix matrix(bool include_journal = false) const;

 private:
  Workspace(std::filesystem::path root, ProjectState state);

  std::filesystem::path root_;
  std::unique_ptr<ProjectLock> lock_;
  ProjectState state_;
  NowFn now_;
};

}  // namespace isaac::app
