#include "isaac/annotate/mock_backend.hpp"

#include <algorithm>

#include "isaac/core/types.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/text.hpp"

namespace isaac::annotate {
namespace {

// Synthetic label: true with probability per_mille / 1000, fixed per key.
bool hashed(std::string_view key, unsigned per_mille) { return text::fnv1a64(key) % 1000 < per_mille; }

// Journal notes are labeled by keyword so fixtures read naturally.
struct NoteCue {
  std::string_view label;
  std::string_view cues[3];
};
constexpr NoteCue kNoteCues[] = {
    {"journal_dnf", {"gave up", "did not finish", "dnf"}},
    {"journal_good_characters", {"great characters", "loved the characters", "good characters"}},
    {"journal_bad_characters", {"characters flat", "flat characters", "bad characters"}},
    {"journal_good_writing", {"beautiful prose", "well written", "good writing"}},
    {"journal_bad_writing", {"clunky prose", "badly written", "bad writing"}},
    {"journal_good_plot", {"great plot", "clever plot", "good plot"}},
    {"journal_bad_plot", {"plot holes", "weak plot", "bad plot"}},
    {"journal_fast_pace", {"page-turner", "fast paced", "fast pace"}},
    {"journal_slow_pace", {"dragged", "slow paced", "slow pace"}},
    {"journal_good_setting", {"vivid setting", "great world", "good setting"}},
    {"journal_bad_setting", {"thin setting", "flat world", "bad setting"}},
    {"journal_addictive", {"couldn't put it down", "addictive", "binge"}},
    {"journal_intellectual", {"thought-provoking", "made me think", "intellectual"}},
};

int note_label(const std::string& note, const std::string& label) {
  const std::string lower = text::to_lower(note);
  for (const auto& cue : kNoteCues) {
    if (cue.label != label) continue;
    for (auto c : cue.cues) {
      if (!c.empty() && lower.find(c) != std::string::npos) return 1;
    }
  }
  return 0;
}

std::string stored_reply(const nlohmann::json& book, std::string_view task, int attempt) {
  const auto& list = book.at("replies").at(std::string(task));
  if (!list.is_array() || list.empty()) return list.is_string() ? list.get<std::string>() : list.dump();
  const auto& r = list.at(static_cast<std::size_t>(std::min<int>(attempt, static_cast<int>(list.size()) - 1)));
  return r.is_string() ? r.get<std::string>() : r.dump();
}

}  // namespace

std::string_view to_string(ClassifyTask task) {
  switch (task) {
    case ClassifyTask::kSummary: return "summary";
    case ClassifyTask::kComments: return "comments";
    case ClassifyTask::kNote: return "note";
  }
  return "summary";
}

MockBackend::MockBackend(const nlohmann::json& corpus) {
  if (corpus.value("format", "") != "isaac-mock-corpus") {
    throw Error(ErrorCode::kFormatError, "not an isaac-mock-corpus document");
  }
  for (const auto& b : corpus.at("books")) {
    const auto id = b.contains("book_id") ? b.at("book_id").get<std::string>()
                                          : make_book_id(b.at("title").get<std::string>(), b.at("author").get<std::string>());
    books_[id] = b;
  }
}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(fs::read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kFormatError, "mock corpus is not valid JSON: " + path.string());
  return MockBackend(j);
}

ResearchResult MockBackend::research(const BookRef& book) {
  ++calls_;
  ResearchResult r;
  const auto it = books_.find(book.book_id);
  if (it == books_.end()) return r;
  const auto& b = it->second;
  for (const auto& s : b.value("found_on", nlohmann::json::array())) r.sources.found_on.insert(s.get<std::string>());
  r.sources.urls = b.value("urls", std::vector<std::string>{});
  r.sources.retrieved_at = b.value("retrieved_at", "");
  r.summary = b.value("summary", "");
  if (b.contains("metadata")) {
    const auto& m = b.at("metadata");
    auto num = [&](const char* key) -> std::optional<double> {
      if (!m.contains(key) || m.at(key).is_null()) return std::nullopt;
      return m.at(key).get<double>();
    };
    r.metadata.avg_rating = num("avg_rating");
    r.metadata.num_ratings = num("num_ratings");
    r.metadata.pages = num("pages");
    r.metadata.genres = m.value("genres", std::vector<std::string>{});
  }
  if (b.contains("comments")) {
    r.comments = b.at("comments").get<std::vector<std::string>>();
  } else if (b.contains("comment_count")) {
    std::vector<std::string> comments;
    const int n = b.at("comment_count").get<int>();
    for (int k = 1; k <= n; ++k) {
      comments.push_back("Reader comment " + std::to_string(k) + " on " + b.value("title", book.title) + ".");
    }
    r.comments = std::move(comments);
  }
  return r;
}

std::string MockBackend::classify(const ClassifyRequest& req) {
  ++calls_;
  const auto it = books_.find(req.book_id);
  const auto task = to_string(req.task);
  if (it != books_.end() && it->second.contains("replies") && it->second.at("replies").contains(std::string(task))) {
    return stored_reply(it->second, task, req.attempt);
  }
  if (req.task == ClassifyTask::kComments) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < req.texts.size(); ++i) {
      nlohmann::json row = nlohmann::json::object();
      for (const auto& label : req.labels) {
        const auto key = req.book_id + "|" + std::to_string(req.chunk) + "|" + std::to_string(i) + "|" + label;
        row[label] = hashed(key, 200) ? 1 : 0;
      }
      rows.push_back(row);
    }
    return rows.dump();
  }
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& label : req.labels) {
    if (req.task == ClassifyTask::kNote) obj[label] = note_label(req.texts.empty() ? "" : req.texts[0], label);
    else obj[label] = hashed(req.book_id + "|" + label, 300) ? 1 : 0;
  }
  return obj.dump();
}

}  // namespace isaac::annotate
