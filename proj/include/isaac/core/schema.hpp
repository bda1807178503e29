#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace isaac {

enum class DimensionGroup {
  kMetadata,
  kCommentMention,
  kTargetGroup,
  kStyle,
  kMood,
  kMainCharacter,
  kTheme,
  kCharacterGoal,
  kStruggleAgainst,
  kJournalNote,
  kCustom,
};

enum class DimensionKind { kBinary, kProportion, kCount, kStars };

enum class DimensionSource { kGoodreadsMeta, kComments, kBackendSummary, kJournal, kUser };

std::string_view to_string(DimensionGroup group);
std::string_view to_string(DimensionKind kind);
std::string_view to_string(DimensionSource source);
DimensionGroup parse_group(std::string_view s);
DimensionKind parse_kind(std::string_view s);
DimensionSource parse_source(std::string_view s);

struct Dimension {
  std::string id;
  std::string label;
  DimensionGroup group = DimensionGroup::kCustom;
  DimensionKind kind = DimensionKind::kBinary;
  DimensionSource source = DimensionSource::kBackendSummary;

  // Journal-note dimensions describe the reader's own notes and stay out of
  // predictive models unless explicitly requested.
  bool modeling_eligible_by_default() const { return group != DimensionGroup::kJournalNote; }

  friend bool operator==(const Dimension&, const Dimension&) = default;
};

bool is_valid_dimension_id(std::string_view id);

// True when value lies in the range allowed for kind.
bool value_in_range(DimensionKind kind, double value);

// The controlled genre list; each entry becomes a genre_<key> binary column.
struct GenreEntry {
  std::string_view key;
  std::string_view label;
  std::span<const std::string_view> synonyms;
};
std::span<const GenreEntry> controlled_genres();

// Maps free-form shelf/genre strings onto the controlled list. Unknown
// strings are ignored.
std::vector<std::string> genre_dimension_ids(std::span<const std::string> genre_strings);

class AnnotationSchema {
 public:
  AnnotationSchema() = default;
  AnnotationSchema(std::vector<Dimension> dimensions, std::int64_t version);

  const std::vector<Dimension>& dimensions() const { return dimensions_; }
  std::int64_t version() const { return version_; }

  const Dimension* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  std::vector<const Dimension*> by_source(DimensionSource source) const;
  std::vector<const Dimension*> by_group(DimensionGroup group) const;

  friend bool operator==(const AnnotationSchema&, const AnnotationSchema&) = default;

 private:
  std::vector<Dimension> dimensions_;
  std::int64_t version_ = 1;
};

// The full annotation table: metadata, genres, comment mentions, content
// labels and journal-note labels. Version 1.
AnnotationSchema default_schema();

// Appends custom dimensions (group forced to custom) and bumps the version.
// An empty extension returns the schema unchanged.
AnnotationSchema extend_schema(const AnnotationSchema& schema, std::vector<Dimension> new_dims);

void to_json(nlohmann::json& j, const Dimension& d);
void from_json(const nlohmann::json& j, Dimension& d);
nlohmann::json schema_to_json(const AnnotationSchema& schema);
AnnotationSchema schema_from_json(const nlohmann::json& j);

}  // namespace isaac
