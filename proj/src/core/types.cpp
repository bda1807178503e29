#include "isaac/core/types.hpp"

#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac {

std::string_view to_string(MediaType type) {
  switch (type) {
    case MediaType::kBook: return "book";
    case MediaType::kMovie: return "movie";
    case MediaType::kTv: return "tv";
  }
  return "book";
}

MediaType parse_media_type(std::string_view s) {
  const std::string v = text::normalize(s);
  if (v.empty() || v == "book") return MediaType::kBook;
  if (v == "movie" || v == "film") return MediaType::kMovie;
  if (v == "tv" || v == "tv show" || v == "series") return MediaType::kTv;
  throw Error(ErrorCode::kFormatError, "unknown media type '" + std::string(s) + "'");
}

std::string make_book_id(std::string_view title, std::string_view author) {
  return text::hex64(text::fnv1a64(text::normalize(title) + "\x1f" + text::normalize(author)));
}

RatedBook make_rated_book(std::string title, std::string author, double raw_rating) {
  RatedBook book;
  book.book_id = make_book_id(title, author);
  book.title = std::move(title);
  book.author = std::move(author);
  book.raw_rating = raw_rating;
  return book;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kWikipedia: return "wikipedia";
    case Provenance::kGoodreads: return "goodreads";
    case Provenance::kBoth: return "both";
    case Provenance::kOtherWeb: return "other_web";
    case Provenance::kJournal: return "journal";
    case Provenance::kUser: return "user";
    case Provenance::kMock: return "mock";
  }
  return "other_web";
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::kWikipedia, Provenance::kGoodreads, Provenance::kBoth, Provenance::kOtherWeb,
                 Provenance::kJournal, Provenance::kUser, Provenance::kMock}) {
    if (to_string(p) == s) return p;
  }
  throw Error(ErrorCode::kFormatError, "unknown provenance '" + std::string(s) + "'");
}

std::optional<double> AnnotationRecord::value(std::string_view dimension_id) const {
  const auto it = values.find(std::string(dimension_id));
  if (it == values.end()) return std::nullopt;
  return it->second;
}

void AnnotationRecord::set(const std::string& dimension_id, std::optional<double> v, Provenance p) {
  values[dimension_id] = v;
  provenance[dimension_id] = p;
}

double AnnotationRecord::coverage(const AnnotationSchema& schema) const {
  if (schema.dimensions().empty()) return 0.0;
  std::size_t present = 0;
  for (const auto& d : schema.dimensions()) {
    if (value(d.id)) ++present;
  }
  return static_cast<double>(present) / static_cast<double>(schema.dimensions().size());
}

void validate_record(const AnnotationRecord& record, const AnnotationSchema& schema) {
  for (const auto& [id, v] : record.values) {
    const Dimension* dim = schema.find(id);
    if (!dim) throw Error(ErrorCode::kUnknownDimension, "record " + record.book_id + " has unknown dimension '" + id + "'");
    if (v && !value_in_range(dim->kind, *v)) {
      throw Error(ErrorCode::kInvalidValue, "record " + record.book_id + ": " + id + "=" + text::format_double(*v) +
                                                " outside " + std::string(to_string(dim->kind)) + " range");
    }
  }
}

std::map<std::string, double> dimension_coverage(const std::vector<AnnotationRecord>& records,
                                                 const AnnotationSchema& schema) {
  std::map<std::string, double> out;
  for (const auto& d : schema.dimensions()) {
    std::size_t present = 0;
    for (const auto& r : records) {
      if (r.value(d.id)) ++present;
    }
    out[d.id] = records.empty() ? 0.0 : static_cast<double>(present) / static_cast<double>(records.size());
  }
  return out;
}

nlohmann::json record_to_json(const AnnotationRecord& record) {
  nlohmann::json values = nlohmann::json::object();
  for (const auto& [id, v] : record.values) values[id] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& [id, p] : record.provenance) prov[id] = to_string(p);
  return nlohmann::json{{"book_id", record.book_id},
                        {"schema_version", record.schema_version},
                        {"found_sources", record.found_sources},
                        {"values", std::move(values)},
                        {"provenance", std::move(prov)}};
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  AnnotationRecord r;
  r.book_id = j.at("book_id").get<std::string>();
  r.schema_version = j.at("schema_version").get<std::int64_t>();
  r.found_sources = j.value("found_sources", std::set<std::string>{});
  for (const auto& [id, v] : j.at("values").items()) {
    r.values[id] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  }
  if (j.contains("provenance")) {
    for (const auto& [id, p] : j.at("provenance").items()) r.provenance[id] = parse_provenance(p.get<std::string>());
  }
  return r;
}

nlohmann::json book_to_json(const RatedBook& b) {
  nlohmann::json j{{"book_id", b.book_id},       {"title", b.title},
                   {"author", b.author},         {"raw_rating", b.raw_rating},
                   {"dnf", b.dnf},               {"hypothetical", b.hypothetical},
                   {"media_type", to_string(b.media_type)}, {"weight", b.weight}};
  j["percentile"] = b.percentile ? nlohmann::json(*b.percentile) : nlohmann::json(nullptr);
  if (b.journal_note) j["journal_note"] = *b.journal_note;
  return j;
}

RatedBook book_from_json(const nlohmann::json& j) {
  RatedBook b = make_rated_book(j.at("title").get<std::string>(), j.at("author").get<std::string>(),
                                j.at("raw_rating").get<double>());
  b.dnf = j.value("dnf", false);
  b.hypothetical = j.value("hypothetical", false);
  b.media_type = parse_media_type(j.value("media_type", std::string("book")));
  b.weight = j.value("weight", 1.0);
  if (j.contains("percentile") && !j["percentile"].is_null()) b.percentile = j["percentile"].get<double>();
  if (j.contains("journal_note")) b.journal_note = j["journal_note"].get<std::string>();
  return b;
}

}  // namespace isaac
