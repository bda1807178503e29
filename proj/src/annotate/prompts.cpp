#include "isaac/annotate/prompts.hpp"

namespace isaac::annotate {
namespace {

std::string kind_hint(DimensionKind kind) {
  switch (kind) {
    case DimensionKind::kBinary: return "1 or 0";
    case DimensionKind::kProportion: return "a number between 0 and 1";
    case DimensionKind::kCount: return "a whole number";
    case DimensionKind::kStars: return "a number between 1 and 5";
  }
  return "a number";
}

std::string dimension_list(std::span<const Dimension* const> dims) {
  std::string out;
  for (const auto* d : dims) out += "- " + d->id + ": " + d->label + " (" + kind_hint(d->kind) + ")\n";
  return out;
}

}  // namespace

std::string research_prompt(const BookRef& book) {
  return "Research the book \"" + book.title + "\" by " + book.author +
         ".\n"
         "Consult Wikipedia, Goodreads and other reliable web sources.\n"
         "Reply with one JSON object and nothing else:\n"
         "{\"found_on\": [any of \"wikipedia\", \"goodreads\", \"other_web\"],\n"
         " \"urls\": [source urls],\n"
         " \"summary\": \"plot, characters, themes, style and mood in about 300 words\",\n"
         " \"metadata\": {\"avg_rating\": number or null, \"num_ratings\": number or null,\n"
         "              \"pages\": number or null, \"genres\": [genre strings]},\n"
         " \"comments\": [up to 60 top reader comments from Goodreads, verbatim]}\n"
         "Use an empty found_on list if you cannot find the book.\n";
}

std::string summary_prompt(const std::string& summary, std::span<const Dimension* const> dims) {
  return "Read the book description below and rate each attribute.\n"
         "Reply with one JSON object keyed by attribute id. Use null when the description does not say.\n\n"
         "Attributes:\n" +
         dimension_list(dims) + "\nDescription:\n" + summary + "\n";
}

std::string comments_prompt(std::span<const std::string> comments, std::span<const Dimension* const> dims) {
  std::string out =
      "Below are numbered reader comments about one book. For each comment, mark every topic it mentions.\n"
      "Reply with a JSON array holding one object per comment, in order, keyed by topic id with 1 or 0.\n\n"
      "Topics:\n" +
      dimension_list(dims) + "\nComments:\n";
  for (std::size_t i = 0; i < comments.size(); ++i) out += std::to_string(i + 1) + ". " + comments[i] + "\n";
  return out;
}

std::string note_prompt(const std::string& note, std::span<const Dimension* const> dims) {
  return "Below is a reader's private journal note about a book. Mark which statements the note supports.\n"
         "Reply with one JSON object keyed by statement id with 1 or 0.\n\n"
         "Statements:\n" +
         dimension_list(dims) + "\nNote:\n" + note + "\n";
}

}  // namespace isaac::annotate
