#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "isaac/annotate/backend.hpp"

namespace isaac::annotate {

// Deterministic backend keyed by book id, loaded from an
// "isaac-mock-corpus" document (see docs/formats.md). Books may carry stored
// replies per task, indexed by attempt; otherwise labels are derived from a
// hash of (book id, label, context), so the same request always gets the
// same reply. Unknown books report no sources.
class MockBackend : public AnnotationBackend {
 public:
  explicit MockBackend(const nlohmann::json& corpus);
  static MockBackend from_file(const std::filesystem::path& path);

  std::string name() const override { return "mock"; }
  ResearchResult research(const BookRef& book) override;
  std::string classify(const ClassifyRequest& request) override;

  std::size_t calls() const { return calls_.load(); }
  std::size_t size() const { return books_.size(); }

 private:
  std::map<std::string, nlohmann::json> books_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace isaac::annotate
