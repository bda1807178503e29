#include "isaac/annotate/annotate.hpp"

#include <algorithm>
#include <cmath>

#include "isaac/annotate/coerce.hpp"
#include "isaac/annotate/prompts.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/parallel.hpp"
#include "isaac/util/text.hpp"

namespace isaac::annotate {
namespace {

std::vector<std::string> ids_of(std::span<const Dimension* const> dims) {
  std::vector<std::string> out;
  for (const auto* d : dims) out.push_back(d->id);
  return out;
}

// Shared by summary and note annotation: one JSON object keyed by dimension.
Annotation object_annotation(AnnotationBackend& backend, ClassifyRequest req, std::span<const Dimension* const> dims,
                             int max_attempts) {
  struct Attempt {
    std::map<std::string, std::optional<double>> values;
    std::vector<std::string> unreadable;
    std::vector<std::string> unknown;
  };
  std::optional<Attempt> best;
  Annotation out;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    req.attempt = attempt;
    out.attempts = attempt + 1;
    const auto parsed = extract_json(backend.classify(req));
    if (!parsed || !parsed->is_object()) continue;
    Attempt a;
    for (const auto* d : dims) {
      if (!parsed->contains(d->id)) {
        a.values[d->id] = std::nullopt;
        continue;
      }
      const auto c = coerce_value(d->kind, parsed->at(d->id));
      a.values[d->id] = c.value;
      if (!c.ok) a.unreadable.push_back(d->id);
    }
    for (const auto& [key, _] : parsed->items()) {
      if (std::none_of(dims.begin(), dims.end(), [&](const Dimension* d) { return d->id == key; })) {
        a.unknown.push_back(key);
      }
    }
    if (!best || a.unreadable.size() < best->unreadable.size()) best = std::move(a);
    if (best->unreadable.empty()) break;
  }
  if (!best) {
    throw Error(ErrorCode::kMalformedResponse, std::string(to_string(req.task)) + " reply for " + req.book_id +
                                                   " held no JSON object after " + std::to_string(max_attempts) +
                                                   " attempts");
  }
  out.values = std::move(best->values);
  for (const auto& k : best->unknown) out.warnings.push_back("dropped unknown key '" + k + "'");
  for (const auto& k : best->unreadable) {
    out.warnings.push_back(k + ": unreadable value after " + std::to_string(out.attempts) + " attempts, set MISSING");
  }
  return out;
}

Provenance provenance_of(const std::set<std::string>& found_on) {
  const bool wiki = found_on.count("wikipedia") > 0;
  const bool gr = found_on.count("goodreads") > 0;
  if (wiki && gr) return Provenance::kBoth;
  if (wiki) return Provenance::kWikipedia;
  if (gr) return Provenance::kGoodreads;
  return Provenance::kOtherWeb;
}

std::vector<std::string> read_comment_file(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& line : text::split(fs::read_file(path), '\n')) {
    const auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::string error_text(const Error& e) { return e.what(); }

}  // namespace

ResearchResult research_book(AnnotationBackend& backend, const BookRef& book) {
  if (text::trim(book.title).empty() || text::trim(book.author).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "research needs a title and an author");
  }
  auto r = backend.research(book);
  if (r.sources.found_on.empty()) {
    throw Error(ErrorCode::kNotDocumented, "no source documents \"" + book.title + "\" by " + book.author);
  }
  return r;
}

Annotation annotate_dimensions(AnnotationBackend& backend, const BookRef& book, const std::string& summary,
                               std::span<const Dimension* const> dims, int max_attempts) {
  if (text::trim(summary).empty()) throw Error(ErrorCode::kInvalidArgument, "summary is empty for " + book.book_id);
  if (dims.empty()) return {};
  ClassifyRequest req;
  req.task = ClassifyTask::kSummary;
  req.book_id = book.book_id;
  req.texts = {summary};
  req.labels = ids_of(dims);
  req.prompt = summary_prompt(summary, dims);
  return object_annotation(backend, std::move(req), dims, max_attempts);
}

CommentBatch CommentBatch::make(std::string book_id, std::span<const std::string> comments) {
  CommentBatch b;
  b.book_id = std::move(book_id);
  for (const auto& c : comments) {
    if (b.comments.size() == kMaxComments) break;
    if (!text::trim(c).empty()) b.comments.push_back(c);
  }
  b.actual_count = b.comments.size();
  return b;
}

Annotation classify_comments(AnnotationBackend& backend, const CommentBatch& batch,
                             std::span<const Dimension* const> dims, int max_attempts) {
  Annotation out;
  if (batch.actual_count > kMaxComments || batch.actual_count != batch.comments.size()) {
    throw Error(ErrorCode::kInvalidArgument, "comment batch count must equal its comments and be <= 60");
  }
  if (batch.actual_count == 0) {
    for (const auto* d : dims) out.values[d->id] = std::nullopt;
    out.warnings.push_back("NoComments: no reader comments for " + batch.book_id + "; mention dimensions MISSING");
    return out;
  }
  if (dims.empty()) return out;
  std::map<std::string, std::size_t> positives;
  int chunk = 0;
  for (std::size_t start = 0; start < batch.comments.size(); start += kCommentChunk, ++chunk) {
    const std::size_t end = std::min(start + kCommentChunk, batch.comments.size());
    const std::span<const std::string> part(batch.comments.data() + start, end - start);
    ClassifyRequest req;
    req.task = ClassifyTask::kComments;
    req.book_id = batch.book_id;
    req.texts.assign(part.begin(), part.end());
    req.labels = ids_of(dims);
    req.prompt = comments_prompt(part, dims);
    req.chunk = chunk;
    std::optional<nlohmann::json> rows;
    for (int attempt = 0; attempt < max_attempts && !rows; ++attempt) {
      req.attempt = attempt;
      ++out.attempts;
      auto parsed = extract_json(backend.classify(req));
      if (parsed && parsed->is_array() && parsed->size() == part.size() &&
          std::all_of(parsed->begin(), parsed->end(), [](const auto& r) { return r.is_object(); })) {
        rows = std::move(parsed);
      }
    }
    if (!rows) {
      throw Error(ErrorCode::kMalformedResponse, "comment chunk " + std::to_string(chunk) + " for " + batch.book_id +
                                                     " did not return one object per comment");
    }
    for (std::size_t i = 0; i < rows->size(); ++i) {
      for (const auto* d : dims) {
        const auto& row = rows->at(i);
        if (!row.contains(d->id)) continue;
        const auto c = coerce_value(DimensionKind::kBinary, row.at(d->id));
        if (!c.ok) {
          out.warnings.push_back(d->id + ": unreadable label for comment " + std::to_string(start + i + 1) +
                                 ", counted as not mentioned");
        } else if (c.value == 1.0) {
          ++positives[d->id];
        }
      }
    }
  }
  for (const auto* d : dims) {
    out.values[d->id] = static_cast<double>(positives[d->id]) / static_cast<double>(batch.actual_count);
  }
  return out;
}

Annotation annotate_notes(AnnotationBackend& backend, const BookRef& book, const std::string& note,
                          std::span<const Dimension* const> dims, int max_attempts) {
  if (text::trim(note).empty()) {
    Annotation out;
    for (const auto* d : dims) out.values[d->id] = std::nullopt;
    return out;
  }
  if (dims.empty()) return {};
  ClassifyRequest req;
  req.task = ClassifyTask::kNote;
  req.book_id = book.book_id;
  req.texts = {note};
  req.labels = ids_of(dims);
  req.prompt = note_prompt(note, dims);
  return object_annotation(backend, std::move(req), dims, max_attempts);
}

std::string_view to_string(BookStatus s) {
  switch (s) {
    case BookStatus::kAnnotated: return "annotated";
    case BookStatus::kCached: return "cached";
    case BookStatus::kNotDocumented: return "not_documented";
    case BookStatus::kFailed: return "failed";
  }
  return "failed";
}

AnnotationRecord annotate_book(AnnotationBackend& backend, const RatedBook& book, const AnnotationSchema& schema,
                               BookReport& report, const RunOptions& options) {
  const BookRef ref{book.book_id, book.title, book.author};
  const auto research = research_book(backend, ref);
  report.found_on = research.sources.found_on;

  AnnotationRecord rec;
  rec.book_id = book.book_id;
  rec.schema_version = schema.version();
  rec.found_sources = research.sources.found_on;
  for (const auto& d : schema.dimensions()) rec.set(d.id, std::nullopt, Provenance::kUser);
  const Provenance from_sources = provenance_of(research.sources.found_on);

  auto merge = [&](const Annotation& a, Provenance p) {
    for (const auto& [id, v] : a.values) rec.set(id, v, p);
    report.warnings.insert(report.warnings.end(), a.warnings.begin(), a.warnings.end());
    report.retries += std::max(0, a.attempts - 1);
  };

  // Metadata: research first, the reader's export as a fallback.
  const auto& md = research.metadata;
  auto put_meta = [&](const std::string& id, std::optional<double> v, std::optional<double> fallback) {
    if (!schema.contains(id)) return;
    const auto* d = schema.find(id);
    if (!v) v = fallback;
    if (v && d->kind == DimensionKind::kCount) v = std::round(*v);
    if (v && !value_in_range(d->kind, *v)) {
      report.warnings.push_back(id + ": metadata value " + text::format_double(*v) + " out of range, set MISSING");
      v.reset();
    }
    rec.set(id, v, Provenance::kGoodreads);
  };
  put_meta("gr_avg_rating", md.avg_rating, book.export_avg_rating);
  put_meta("gr_num_ratings", md.num_ratings, std::nullopt);
  put_meta("num_pages", md.pages, book.export_num_pages);
  const auto genre_ids = genre_dimension_ids(md.genres);
  for (const auto* d : schema.by_source(DimensionSource::kGoodreadsMeta)) {
    if (!d->id.starts_with("genre_")) continue;
    std::optional<double> v;
    if (!md.genres.empty()) v = std::count(genre_ids.begin(), genre_ids.end(), d->id) > 0 ? 1.0 : 0.0;
    rec.set(d->id, v, Provenance::kGoodreads);
  }

  const auto summary_dims = schema.by_source(DimensionSource::kBackendSummary);
  if (!summary_dims.empty()) {
    if (text::trim(research.summary).empty()) {
      report.warnings.push_back("research returned no summary; summary dimensions MISSING");
    } else {
      merge(annotate_dimensions(backend, ref, research.summary, summary_dims, options.max_attempts), from_sources);
    }
  }

  const auto comment_dims = schema.by_source(DimensionSource::kComments);
  if (!comment_dims.empty()) {
    std::vector<std::string> comments;
    if (research.comments) {
      comments = *research.comments;
    } else if (options.comments_dir) {
      const auto path = *options.comments_dir / (book.book_id + ".txt");
      if (std::filesystem::exists(path)) comments = read_comment_file(path);
    }
    const auto batch = CommentBatch::make(book.book_id, comments);
    report.comment_count = batch.actual_count;
    merge(classify_comments(backend, batch, comment_dims, options.max_attempts), Provenance::kGoodreads);
  }

  const auto journal_dims = schema.by_source(DimensionSource::kJournal);
  if (!journal_dims.empty() && book.journal_note) {
    merge(annotate_notes(backend, ref, *book.journal_note, journal_dims, options.max_attempts), Provenance::kJournal);
  }
  validate_record(rec, schema);
  return rec;
}

nlohmann::json run_report_to_json(const RunReport& report) {
  nlohmann::json books = nlohmann::json::array();
  for (const auto& b : report.books) {
    nlohmann::json j{{"book_id", b.book_id},
                     {"title", b.title},
                     {"status", to_string(b.status)},
                     {"found_on", b.found_on},
                     {"retries", b.retries},
                     {"comment_count", b.comment_count},
                     {"warnings", b.warnings}};
    if (!b.error.empty()) j["error"] = b.error;
    books.push_back(j);
  }
  return nlohmann::json{{"books", books},
                        {"annotated", report.annotated},
                        {"cached", report.cached},
                        {"not_documented", report.not_documented},
                        {"failed", report.failed},
                        {"coverage",
                         {{"wikipedia", report.wikipedia},
                          {"goodreads", report.goodreads},
                          {"both", report.both},
                          {"other_web_only", report.other_web_only}}},
                        {"retries", report.retries},
                        {"complete", report.complete}};
}

RecordStore::RecordStore(std::filesystem::path path) : path_(std::move(path)) {}

std::map<std::string, AnnotationRecord> RecordStore::load(std::int64_t schema_version) const {
  std::map<std::string, AnnotationRecord> out;
  if (!std::filesystem::exists(path_)) return out;
  const auto lines = text::split(fs::read_file(path_), '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto j = nlohmann::json::parse(lines[i], nullptr, false);
    if (j.is_discarded()) {
      // A torn final line is what an interrupted append leaves behind.
      const bool last = std::all_of(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1, lines.end(),
                                    [](const std::string& l) { return text::trim(l).empty(); });
      if (last) break;
      throw Error(ErrorCode::kCorruptProject,
                  path_.filename().string() + " line " + std::to_string(i + 1) + " is not valid JSON");
    }
    AnnotationRecord r;
    try {
      r = record_from_json(j);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kCorruptProject,
                  path_.filename().string() + " line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (r.schema_version == schema_version) out[r.book_id] = std::move(r);
    else out.erase(r.book_id);
  }
  return out;
}

void RecordStore::append(const AnnotationRecord& record) {
  std::lock_guard lock(mu_);
  fs::append_line(path_, record_to_json(record).dump());
}

void RecordStore::finalize(std::int64_t schema_version) {
  std::lock_guard lock(mu_);
  std::string content;
  for (const auto& [id, r] : load(schema_version)) content += record_to_json(r).dump() + "\n";
  fs::atomic_write(path_, content);
}

RunResult run_annotation(AnnotationBackend& backend, std::span<const RatedBook> books, const AnnotationSchema& schema,
                         RecordStore* store, const RunOptions& options) {
  if (books.empty()) throw Error(ErrorCode::kEmptyCorpus, "no books to annotate");
  std::map<std::string, AnnotationRecord> cached;
  if (store) cached = store->load(schema.version());

  std::vector<const RatedBook*> unique;
  std::set<std::string> seen;
  for (const auto& b : books) {
    if (seen.insert(b.book_id).second) unique.push_back(&b);
  }
  std::vector<const RatedBook*> todo;
  for (const auto* b : unique) {
    if (!cached.count(b->book_id)) todo.push_back(b);
  }
  RunResult result;
  if (todo.size() > options.max_books) {
    todo.resize(options.max_books);
    result.report.complete = false;
  }

  std::vector<BookReport> reports(todo.size());
  std::vector<std::optional<AnnotationRecord>> fresh(todo.size());
  parallel_for(todo.size(), options.workers, [&](std::size_t k) {
    const auto& book = *todo[k];
    auto& rep = reports[k];
    rep.book_id = book.book_id;
    rep.title = book.title;
    try {
      auto rec = annotate_book(backend, book, schema, rep, options);
      if (store) store->append(rec);
      fresh[k] = std::move(rec);
      rep.status = BookStatus::kAnnotated;
    } catch (const Error& e) {
      rep.status = e.code() == ErrorCode::kNotDocumented ? BookStatus::kNotDocumented : BookStatus::kFailed;
      rep.error = error_text(e);
    } catch (const std::exception& e) {
      rep.status = BookStatus::kFailed;
      rep.error = e.what();
    }
  });

  std::map<std::string, AnnotationRecord> all;
  std::map<std::string, BookReport> by_id;
  for (const auto* b : unique) {
    if (auto it = cached.find(b->book_id); it != cached.end()) {
      all[b->book_id] = it->second;
      BookReport rep;
      rep.book_id = b->book_id;
      rep.title = b->title;
      rep.status = BookStatus::kCached;
      rep.found_on = it->second.found_sources;
      by_id[b->book_id] = rep;
    }
  }
  for (std::size_t k = 0; k < todo.size(); ++k) {
    if (fresh[k]) all[todo[k]->book_id] = std::move(*fresh[k]);
    by_id[todo[k]->book_id] = std::move(reports[k]);
  }
  if (store) store->finalize(schema.version());

  auto& rep = result.report;
  for (auto& [id, r] : all) result.records.push_back(std::move(r));
  for (auto& [id, b] : by_id) {
    switch (b.status) {
      case BookStatus::kAnnotated: ++rep.annotated; break;
      case BookStatus::kCached: ++rep.cached; break;
      case BookStatus::kNotDocumented: ++rep.not_documented; break;
      case BookStatus::kFailed: ++rep.failed; break;
    }
    if (b.status == BookStatus::kAnnotated || b.status == BookStatus::kCached) {
      const bool wiki = b.found_on.count("wikipedia") > 0;
      const bool gr = b.found_on.count("goodreads") > 0;
      rep.wikipedia += wiki;
      rep.goodreads += gr;
      rep.both += wiki && gr;
      rep.other_web_only += !wiki && !gr;
    }
    rep.retries += b.retries;
    rep.books.push_back(std::move(b));
  }
  return result;
}

}  // namespace isaac::annotate
