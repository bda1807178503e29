#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "isaac/annotate/backend.hpp"
#include "isaac/core/schema.hpp"
#include "isaac/core/types.hpp"

namespace isaac::annotate {

inline constexpr std::size_t kMaxComments = 60;
inline constexpr std::size_t kCommentChunk = 20;
inline constexpr int kMaxAttempts = 3;

struct Annotation {
  std::map<std::string, std::optional<double>> values;
  std::vector<std::string> warnings;
  int attempts = 0;
};

// Research plus NotDocumented when no source knows the book.
ResearchResult research_book(AnnotationBackend& backend, const BookRef& book);

// Asks for one JSON object keyed by dimension id. Values are coerced per
// kind; keys absent from the reply are MISSING; unknown keys are dropped with
// a warning. A reply with unreadable values is retried up to max_attempts and
// the attempt with the most readable values is kept, leftovers MISSING.
// MalformedResponse when no attempt yields a JSON object.
Annotation annotate_dimensions(AnnotationBackend& backend, const BookRef& book, const std::string& summary,
                               std::span<const Dimension* const> dims, int max_attempts = kMaxAttempts);

struct CommentBatch {
  std::string book_id;
  std::vector<std::string> comments;
  std::size_t actual_count = 0;

  // Keeps the first kMaxComments non-empty comments.
  static CommentBatch make(std::string book_id, std::span<const std::string> comments);
};

// Labels comments in chunks of kCommentChunk; each reply is an array with
// one object per comment. Proportion = positives / actual_count. An empty
// batch sets every dimension MISSING with a NoComments warning.
Annotation classify_comments(AnnotationBackend& backend, const CommentBatch& batch,
                             std::span<const Dimension* const> dims, int max_attempts = kMaxAttempts);

// Binary journal dimensions from the reader's own note. An empty note skips
// the call and leaves every dimension MISSING.
Annotation annotate_notes(AnnotationBackend& backend, const BookRef& book, const std::string& note,
                          std::span<const Dimension* const> dims, int max_attempts = kMaxAttempts);

enum class BookStatus { kAnnotated, kCached, kNotDocumented, kFailed };
std::string_view to_string(BookStatus s);

struct BookReport {
  std::string book_id;
  std::string title;
  BookStatus status = BookStatus::kAnnotated;
  std::set<std::string> found_on;
  std::string error;  // "Code: message" for failures
  int retries = 0;
  std::size_t comment_count = 0;
  std::vector<std::string> warnings;
};

struct RunReport {
  std::vector<BookReport> books;  // sorted by book id
  std::size_t annotated = 0;
  std::size_t cached = 0;
  std::size_t not_documented = 0;
  std::size_t failed = 0;
  std::size_t wikipedia = 0;
  std::size_t goodreads = 0;
  std::size_t both = 0;
  std::size_t other_web_only = 0;
  int retries = 0;
  bool complete = true;  // false when max_books stopped the run early
};

nlohmann::json run_report_to_json(const RunReport& report);

// Persisted records, one JSON object per line in records.jsonl. Appends are
// serialized and synced; finalize() rewrites the file sorted by book id so a
// completed run is byte-identical however it was scheduled or resumed.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path);

  // Records whose schema version matches; others are stale and re-annotated.
  std::map<std::string, AnnotationRecord> load(std::int64_t schema_version) const;
  void append(const AnnotationRecord& record);
  void finalize(std::int64_t schema_version);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

struct RunOptions {
  int workers = 1;
  // Stop after this many books have been processed (simulated interruption).
  std::size_t max_books = std::numeric_limits<std::size_t>::max();
  // comments/<book_id>.txt, one comment per line, used when research
  // returns no comments.
  std::optional<std::filesystem::path> comments_dir;
  int max_attempts = kMaxAttempts;
};

struct RunResult {
  std::vector<AnnotationRecord> records;  // sorted by book id
  RunReport report;
};

// Annotates one book: research, metadata and genres, summary dimensions,
// comment mentions and journal dimensions.
AnnotationRecord annotate_book(AnnotationBackend& backend, const RatedBook& book, const AnnotationSchema& schema,
                               BookReport& report, const RunOptions& options = {});

// Annotates every book not already in `store` (when given). Per-book errors
// are recorded in the report and never abort the run.
RunResult run_annotation(AnnotationBackend& backend, std::span<const RatedBook> books, const AnnotationSchema& schema,
                         RecordStore* store, const RunOptions& options = {});

}  // namespace isaac::annotate
