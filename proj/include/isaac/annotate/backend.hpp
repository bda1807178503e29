#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace isaac::annotate {

struct BookRef {
  std::string book_id;
  std::string title;
  std::string author;
};

// Sites are "wikipedia", "goodreads" and "other_web".
struct SourceReport {
  std::set<std::string> found_on;
  std::vector<std::string> urls;
  std::string retrieved_at;
};

struct BookMetadata {
  std::optional<double> avg_rating;
  std::optional<double> num_ratings;
  std::optional<double> pages;
  std::vector<std::string> genres;
};

struct ResearchResult {
  SourceReport sources;
  std::string summary;
  BookMetadata metadata;
  // Top reader comments when the backend returns them.
  std::optional<std::vector<std::string>> comments;
};

enum class ClassifyTask { kSummary, kComments, kNote };

std::string_view to_string(ClassifyTask task);

struct ClassifyRequest {
  ClassifyTask task = ClassifyTask::kSummary;
  std::string book_id;
  // Summary or note: one text. Comments: one entry per comment in the chunk.
  std::vector<std::string> texts;
  std::vector<std::string> labels;  // dimension ids
  std::string prompt;               // fully rendered prompt
  int chunk = 0;
  int attempt = 0;
};

// A search-augmented language model. research() gathers sources, a summary
// and metadata for one book; classify() returns the model's raw reply, which
// the caller parses.
class AnnotationBackend {
 public:
  virtual ~AnnotationBackend() = default;
  virtual std::string name() const = 0;
  virtual ResearchResult research(const BookRef& book) = 0;
  virtual std::string classify(const ClassifyRequest& request) = 0;
};

}  // namespace isaac::annotate
