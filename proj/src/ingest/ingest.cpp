#include "isaac/ingest/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "isaac/util/csv.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/text.hpp"

namespace isaac::ingest {
namespace {

bool parse_flag(std::string_view s) {
  const std::string v = text::normalize(s);
  return v == "1" || v == "true" || v == "yes" || v == "y" || v == "x";
}

std::string line_ref(std::size_t row_index) { return "line " + std::to_string(row_index + 2); }

ParseResult parse_goodreads(const csv::Table& table) {
  const auto title = table.column("Title");
  const auto author = table.column("Author");
  const auto rating = table.column("My Rating");
  if (!title || !author || !rating) {
    throw Error(ErrorCode::kFormatError, "Goodreads export needs Title, Author and My Rating columns");
  }
  const auto avg = table.column("Average Rating");
  const auto pages = table.column("Number of Pages");

  ParseResult result;
  result.format = RatingsFormat::kGoodreadsCsv;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::string t(text::trim(table.cell(row, *title)));
    const std::string a(text::trim(table.cell(row, *author)));
    const auto stars = text::parse_double(table.cell(row, *rating));
    if (t.empty() || a.empty()) throw Error(ErrorCode::kFormatError, line_ref(i) + ": missing title or author");
    if (!stars) throw Error(ErrorCode::kFormatError, line_ref(i) + ": My Rating is not a number");
    if (*stars == 0.0) {
      result.warnings.push_back(line_ref(i) + ": '" + t + "' has no rating (My Rating=0), skipped");
      continue;
    }
    if (*stars < 1.0 || *stars > 5.0) throw Error(ErrorCode::kFormatError, line_ref(i) + ": My Rating outside 1-5");
    RatedBook book = make_rated_book(t, a, 20.0 * *stars);
    if (avg) {
      const auto v = text::parse_double(table.cell(row, *avg));
      if (v && *v >= 1.0 && *v <= 5.0) book.export_avg_rating = v;
    }
    if (pages) {
      const auto v = text::parse_double(table.cell(row, *pages));
      if (v && *v > 0.0) book.export_num_pages = v;
    }
    result.books.push_back(std::move(book));
  }
  return result;
}

ParseResult parse_simple(const csv::Table& table) {
  const auto title = table.column("title");
  const auto author = table.column("author");
  const auto rating = table.column("rating");
  if (!title || !author || !rating) {
    throw Error(ErrorCode::kFormatError, "ratings file needs title, author and rating columns");
  }
  const auto dnf = table.column("dnf");
  const auto hypothetical = table.column("hypothetical");
  const auto media = table.column("media_type");
  const auto weight = table.column("weight");
  const auto percentile = table.column("percentile");
  const auto note = table.column("journal_note");
  const auto export_avg = table.column("export_avg_rating");
  const auto export_pages = table.column("export_num_pages");

  ParseResult result;
  result.format = RatingsFormat::kSimpleCsv;
  for (std::size_t i = 0; i < table.rows().size(); ++i) {
    const auto& row = table.rows()[i];
    const std::string t(text::trim(table.cell(row, *title)));
    const std::string a(text::trim(table.cell(row, *author)));
    if (t.empty() || a.empty()) throw Error(ErrorCode::kFormatError, line_ref(i) + ": missing title or author");
    const auto cell = text::trim(table.cell(row, *rating));
    if (cell.empty() || text::to_lower(cell) == "unrated") {
      result.warnings.push_back(line_ref(i) + ": '" + t + "' is unrated, skipped");
      continue;
    }
    const auto value = text::parse_double(cell);
    if (!value) throw Error(ErrorCode::kFormatError, line_ref(i) + ": rating '" + std::string(cell) + "' is not a number");
    if (*value < 0.0 || *value > 100.0) throw Error(ErrorCode::kFormatError, line_ref(i) + ": rating outside 0-100");
    RatedBook book = make_rated_book(t, a, *value);
    if (dnf) book.dnf = parse_flag(table.cell(row, *dnf));
    if (hypothetical) book.hypothetical = parse_flag(table.cell(row, *hypothetical));
    if (media) book.media_type = parse_media_type(table.cell(row, *media));
    if (weight) {
      if (const auto w = text::parse_double(table.cell(row, *weight))) book.weight = *w;
    }
    if (percentile) book.percentile = text::parse_double(table.cell(row, *percentile));
    if (note) {
      const std::string n(table.cell(row, *note));
      if (!n.empty()) book.journal_note = n;
    }
    if (export_avg) book.export_avg_rating = text::parse_double(table.cell(row, *export_avg));
    if (export_pages) book.export_num_pages = text::parse_double(table.cell(row, *export_pages));
    result.books.push_back(std::move(book));
  }
  return result;
}

std::map<std::string, std::vector<std::size_t>> title_index(const std::vector<RatedBook>& books) {
  std::map<std::string, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < books.size(); ++i) index[text::normalize(books[i].title)].push_back(i);
  return index;
}

}  // namespace

DnfPolicy parse_dnf_policy(std::string_view s) {
  if (s == "include") return DnfPolicy::kInclude;
  if (s == "exclude") return DnfPolicy::kExclude;
  if (s == "impute-floor") return DnfPolicy::kImputeFloor;
  throw Error(ErrorCode::kInvalidArgument, "dnf policy must be include, exclude or impute-floor");
}

RatingsFormat parse_ratings_format(std::string_view s) {
  if (s == "auto") return RatingsFormat::kAuto;
  if (s == "goodreads" || s == "goodreads_csv") return RatingsFormat::kGoodreadsCsv;
  if (s == "simple" || s == "simple_csv") return RatingsFormat::kSimpleCsv;
  throw Error(ErrorCode::kInvalidArgument, "ratings format must be auto, goodreads or simple");
}

ParseResult parse_ratings_text(std::string_view text, RatingsFormat format) {
  if (text::trim(text).empty()) throw Error(ErrorCode::kEmptyFile, "ratings file is empty");
  csv::Table table(csv::parse(text));
  if (table.rows().empty()) throw Error(ErrorCode::kEmptyFile, "ratings file has a header but no rows");
  if (format == RatingsFormat::kAuto) {
    format = table.column("My Rating") ? RatingsFormat::kGoodreadsCsv : RatingsFormat::kSimpleCsv;
  }
  return format == RatingsFormat::kGoodreadsCsv ? parse_goodreads(table) : parse_simple(table);
}

ParseResult parse_ratings_export(const std::filesystem::path& path, RatingsFormat format) {
  return parse_ratings_text(fs::read_file(path), format);
}

std::string write_simple_csv(std::span<const RatedBook> books) {
  std::string out = csv::format_row(
      {"title", "author", "rating", "dnf", "hypothetical", "media_type", "weight", "percentile", "journal_note",
       "export_avg_rating", "export_num_pages"});
  for (const auto& b : books) {
    out += csv::format_row({b.title, b.author, text::format_double(b.raw_rating), b.dnf ? "1" : "0",
                            b.hypothetical ? "1" : "0", std::string(to_string(b.media_type)),
                            text::format_double(b.weight), b.percentile ? text::format_double(*b.percentile) : "",
                            b.journal_note.value_or(""),
                            b.export_avg_rating ? text::format_double(*b.export_avg_rating) : "",
                            b.export_num_pages ? text::format_double(*b.export_num_pages) : ""});
  }
  return out;
}

double skewness(std::span<const double> values, SkewnessEstimator estimator) {
  const auto n = static_cast<double>(values.size());
  if (values.size() < 3) throw Error(ErrorCode::kDegenerateSample, "skewness needs at least 3 values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) throw Error(ErrorCode::kDegenerateSample, "skewness of a constant sample");
  const double g1 = m3 / std::pow(m2, 1.5);
  switch (estimator) {
    case SkewnessEstimator::kG1: return g1;
    case SkewnessEstimator::kAdjustedG1: return g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
    case SkewnessEstimator::kB1: return g1 * std::pow((n - 1.0) / n, 1.5);
  }
  return g1;
}

std::vector<double> percentile_rank(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1; their average is (i+j)/2 + 1.
    const double avg_rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = (avg_rank - 0.5) / static_cast<double>(n);
    i = j + 1;
  }
  return out;
}

void apply_percentiles(std::vector<RatedBook>& books) {
  std::vector<double> raw;
  raw.reserve(books.size());
  for (const auto& b : books) raw.push_back(b.raw_rating);
  const auto pr = percentile_rank(raw);
  for (std::size_t i = 0; i < books.size(); ++i) books[i].percentile = pr[i];
}

std::vector<RatedBook> apply_dnf_policy(std::vector<RatedBook> books, DnfPolicy policy) {
  switch (policy) {
    case DnfPolicy::kInclude:
      break;
    case DnfPolicy::kExclude:
      std::erase_if(books, [](const RatedBook& b) { return b.dnf; });
      break;
    case DnfPolicy::kImputeFloor: {
      if (books.empty()) break;
      const double floor =
          std::min_element(books.begin(), books.end(), [](const auto& a, const auto& b) {
            return a.raw_rating < b.raw_rating;
          })->raw_rating;
      for (auto& b : books) {
        if (b.dnf) b.raw_rating = floor;
      }
      break;
    }
  }
  return books;
}

JournalNotes parse_journal_notes_text(std::string_view text, std::vector<RatedBook>& books) {
  JournalNotes result;
  if (text::trim(text).empty()) return result;
  csv::Table table(csv::parse(text));
  const auto note_col = table.column("note");
  const auto book_col = table.column("book");
  const auto title_col = table.column("title");
  const auto author_col = table.column("author");
  if (!note_col || (!book_col && !(title_col && author_col))) {
    throw Error(ErrorCode::kFormatError, "journal notes need columns book,note or title,author,note");
  }

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < books.size(); ++i) by_id[books[i].book_id] = i;
  const auto titles = title_index(books);

  for (const auto& row : table.rows()) {
    std::string key;
    std::optional<std::size_t> match;
    if (book_col) {
      key = std::string(text::trim(table.cell(row, *book_col)));
      if (const auto bar = key.find('|'); bar != std::string::npos) {
        const auto id = make_book_id(key.substr(0, bar), key.substr(bar + 1));
        if (auto it = by_id.find(id); it != by_id.end()) match = it->second;
      } else if (auto it = by_id.find(key); it != by_id.end()) {
        match = it->second;
      } else if (auto t = titles.find(text::normalize(key)); t != titles.end() && t->second.size() == 1) {
        match = t->second.front();
      }
    } else {
      const std::string t(text::trim(table.cell(row, *title_col)));
      const std::string a(text::trim(table.cell(row, *author_col)));
      key = t + "|" + a;
      if (auto it = by_id.find(make_book_id(t, a)); it != by_id.end()) match = it->second;
    }
    const std::string note(text::trim(table.cell(row, *note_col)));
    if (!match) {
      result.unmatched.push_back(key);
      continue;
    }
    if (note.empty()) continue;
    books[*match].journal_note = note;
    result.notes[books[*match].book_id] = note;
  }
  return result;
}

JournalNotes parse_journal_notes(const std::filesystem::path& path, std::vector<RatedBook>& books) {
  return parse_journal_notes_text(fs::read_file(path), books);
}

std::vector<RatedBook> merge_media_ratings(std::vector<RatedBook> books, std::vector<RatedBook> extra, double weight) {
  if (!(weight > 0.0 && weight <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "merge weight must lie in (0, 1]");
  for (auto& e : extra) {
    if (e.media_type == MediaType::kBook && !e.hypothetical) {
      throw Error(ErrorCode::kUnflaggedExtra, "'" + e.title + "' is neither a movie/TV item nor a hypothetical rating");
    }
    e.weight = weight;
  }
  for (auto& b : books) {
    if (b.media_type == MediaType::kBook && !b.hypothetical) b.weight = 1.0;
  }
  books.insert(books.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  apply_percentiles(books);
  return books;
}

}  // namespace isaac::ingest
