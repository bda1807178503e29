#include "isaac/core/schema.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac {
namespace {

template <class Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table,
                std::string_view what) {
  for (const auto& [value, name] : table) {
    if (name == s) return value;
  }
  throw Error(ErrorCode::kFormatError, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}

constexpr std::array<std::pair<DimensionGroup, std::string_view>, 11> kGroupNames{{
    {DimensionGroup::kMetadata, "metadata"},
    {DimensionGroup::kCommentMention, "comment_mention"},
    {DimensionGroup::kTargetGroup, "target_group"},
    {DimensionGroup::kStyle, "style"},
    {DimensionGroup::kMood, "mood"},
    {DimensionGroup::kMainCharacter, "main_character"},
    {DimensionGroup::kTheme, "theme"},
    {DimensionGroup::kCharacterGoal, "character_goal"},
    {DimensionGroup::kStruggleAgainst, "struggle_against"},
    {DimensionGroup::kJournalNote, "journal_note"},
    {DimensionGroup::kCustom, "custom"},
}};

constexpr std::array<std::pair<DimensionKind, std::string_view>, 4> kKindNames{{
    {DimensionKind::kBinary, "binary"},
    {DimensionKind::kProportion, "proportion"},
    {DimensionKind::kCount, "count"},
    {DimensionKind::kStars, "stars"},
}};

constexpr std::array<std::pair<DimensionSource, std::string_view>, 5> kSourceNames{{
    {DimensionSource::kGoodreadsMeta, "goodreads_meta"},
    {DimensionSource::kComments, "comments"},
    {DimensionSource::kBackendSummary, "backend_summary"},
    {DimensionSource::kJournal, "journal"},
    {DimensionSource::kUser, "user"},
}};

template <class Enum, std::size_t N>
std::string_view name_of(Enum value, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "unknown";
}

struct Row {
  std::string_view id;
  std::string_view label;
};

constexpr std::string_view kFantasy[] = {"fantasy", "high fantasy", "urban fantasy", "epic fantasy", "magic"};
constexpr std::string_view kSciFi[] = {"science fiction", "sci-fi", "scifi", "sf", "dystopia", "space opera",
                                       "cyberpunk"};
constexpr std::string_view kRomance[] = {"romance", "romantic", "love story"};
constexpr std::string_view kMystery[] = {"mystery", "crime", "detective", "mystery/crime", "whodunit", "noir"};
constexpr std::string_view kHistorical[] = {"historical", "historical fiction", "history"};
constexpr std::string_view kLiterary[] = {"literary", "literary fiction", "literature"};
constexpr std::string_view kThriller[] = {"thriller", "suspense", "psychological thriller"};
constexpr std::string_view kHorror[] = {"horror", "gothic", "ghost stories"};
constexpr std::string_view kNonfiction[] = {"nonfiction", "non-fiction", "memoir", "biography", "essays"};
constexpr std::string_view kClassics[] = {"classics", "classic", "classic literature"};
constexpr std::string_view kYoungAdult[] = {"young adult", "young-adult", "ya", "teen"};
constexpr std::string_view kContemporary[] = {"contemporary", "contemporary fiction", "modern fiction"};

const std::array<GenreEntry, 12> kGenres{{
    {"fantasy", "Fantasy", kFantasy},
    {"scifi", "Science fiction", kSciFi},
    {"romance", "Romance", kRomance},
    {"mystery_crime", "Mystery / crime", kMystery},
    {"historical", "Historical", kHistorical},
    {"literary", "Literary fiction", kLiterary},
    {"thriller", "Thriller", kThriller},
    {"horror", "Horror", kHorror},
    {"nonfiction", "Nonfiction", kNonfiction},
    {"classics", "Classics", kClassics},
    {"young_adult", "Young adult", kYoungAdult},
    {"contemporary", "Contemporary", kContemporary},
}};

constexpr Row kMentions[] = {
    {"mention_good_characters", "Comments mention: good characters"},
    {"mention_bad_characters", "Comments mention: bad characters"},
    {"mention_bad_writing", "Comments mention: bad writing style"},
    {"mention_good_writing", "Comments mention: good writing style"},
    {"mention_good_plot", "Comments mention: good plot"},
    {"mention_bad_plot", "Comments mention: bad plot"},
    {"mention_fast_pace", "Comments mention: fast pace"},
    {"mention_slow_pace", "Comments mention: slow pace"},
    {"mention_good_setting", "Comments mention: good setting"},
    {"mention_bad_setting", "Comments mention: bad setting"},
    {"mention_dnf", "Comments mention: did not finish"},
    {"mention_addictive", "Comments mention: addictive content"},
    {"mention_intellectual", "Comments mention: intellectual content"},
};

constexpr Row kTargets[] = {
    {"target_women", "Target group: women"},
    {"target_men", "Target group: men"},
    {"target_romance_lovers", "Target group: romance lovers"},
    {"target_action_junkies", "Target group: action junkies"},
    {"target_poetry_lovers", "Target group: poetry lovers"},
    {"target_scientists", "Target group: scientists"},
    {"target_young_people", "Target group: young people"},
    {"target_adults", "Target group: adults"},
    {"target_social_activists", "Target group: social activists"},
    {"target_history_fans", "Target group: history fans"},
};

constexpr Row kStyles[] = {
    {"style_complex", "Style: complex"},
    {"style_introspective", "Style: introspective"},
    {"style_plot_focused", "Style: plot-focused"},
    {"style_flowery", "Style: flowery"},
    {"style_poetic", "Style: poetic"},
    {"style_many_characters", "Style: lots of characters"},
    {"style_funny", "Style: funny"},
    {"style_experimental", "Style: experimental"},
};

constexpr Row kMoods[] = {
    {"mood_dark", "Mood: dark"},
    {"mood_light", "Mood: light"},
    {"mood_happy", "Mood: happy"},
    {"mood_tragic", "Mood: tragic"},
    {"mood_thrilling", "Mood: thrilling"},
    {"mood_serious", "Mood: serious"},
    {"mood_nostalgic", "Mood: nostalgic"},
    {"mood_cozy", "Mood: cozy"},
    {"mood_fearful", "Mood: fearful"},
    {"mood_thought_provoking", "Mood: thought-provoking"},
};

constexpr Row kMainCharacter[] = {
    {"mc_teenager", "Main character: teenager"},
    {"mc_adult", "Main character: adult"},
    {"mc_senior", "Main character: senior"},
    {"mc_male", "Main character: male"},
    {"mc_female", "Main character: female"},
    {"mc_minority", "Main character: minority member"},
    {"mc_majority", "Main character: majority member"},
    {"mc_none", "No clear main character"},
};

constexpr Row kThemes[] = {
    {"theme_romance", "Theme: romance"},
    {"theme_family", "Theme: family"},
    {"theme_war", "Theme: war"},
    {"theme_violence", "Theme: violence"},
    {"theme_politics", "Theme: politics"},
    {"theme_prejudice", "Theme: prejudice"},
    {"theme_solitude", "Theme: solitude"},
    {"theme_survival", "Theme: survival"},
    {"theme_magic", "Theme: magic"},
    {"theme_personal_growth", "Theme: personal growth"},
    {"theme_womens_issues", "Theme: women's issues"},
    {"theme_money", "Theme: money"},
    {"theme_coming_of_age", "Theme: coming of age"},
    {"theme_academia", "Theme: academia"},
};

constexpr Row kGoals[] = {
    {"goal_destroy_evil", "Character goal: destroy an evil"},
    {"goal_relationship", "Character goal: establish a relationship"},
    {"goal_survive", "Character goal: survive"},
    {"goal_political", "Character goal: reach political aspiration"},
    {"goal_professional", "Character goal: reach professional aspiration"},
    {"goal_solve_crime", "Character goal: solve a crime"},
    {"goal_defeat_opponent", "Character goal: defeat an opponent"},
    {"goal_inner_peace", "Character goal: gain inner peace"},
    {"goal_understand_self", "Character goal: understand the self"},
    {"goal_protect_someone", "Character goal: protect someone"},
    {"goal_vengeance", "Character goal: vengeance"},
    {"goal_forgive", "Character goal: forgive"},
    {"goal_personal_growth", "Character goal: achieve personal growth"},
    {"goal_escape", "Character goal: escape"},
    {"goal_none", "Character goal: no clear goals"},
};

constexpr Row kStruggles[] = {
    {"struggle_character", "Struggles against: other character"},
    {"struggle_society", "Struggles against: society"},
    {"struggle_nature", "Struggles against: nature"},
    {"struggle_technology", "Struggles against: technology"},
    {"struggle_fate", "Struggles against: fate"},
    {"struggle_supernatural", "Struggles against: supernatural"},
    {"struggle_self", "Struggles against: self"},
};

constexpr Row kJournal[] = {
    {"journal_dnf", "Journal: did not finish"},
    {"journal_good_characters", "Journal: good characters"},
    {"journal_bad_characters", "Journal: bad characters"},
    {"journal_good_writing", "Journal: good writing style"},
    {"journal_bad_writing", "Journal: bad writing style"},
    {"journal_good_plot", "Journal: good plot"},
    {"journal_bad_plot", "Journal: bad plot"},
    {"journal_fast_pace", "Journal: fast pace"},
    {"journal_slow_pace", "Journal: slow pace"},
    {"journal_good_setting", "Journal: good setting"},
    {"journal_bad_setting", "Journal: bad setting"},
    {"journal_addictive", "Journal: addictive content"},
    {"journal_intellectual", "Journal: intellectual content"},
};

void add_rows(std::vector<Dimension>& out, std::span<const Row> rows, DimensionGroup group, DimensionKind kind,
              DimensionSource source) {
  for (const auto& row : rows) {
    out.push_back(Dimension{std::string(row.id), std::string(row.label), group, kind, source});
  }
}

}  // namespace

std::string_view to_string(DimensionGroup group) { return name_of(group, kGroupNames); }
std::string_view to_string(DimensionKind kind) { return name_of(kind, kKindNames); }
std::string_view to_string(DimensionSource source) { return name_of(source, kSourceNames); }
DimensionGroup parse_group(std::string_view s) { return parse_enum(s, kGroupNames, "dimension group"); }
DimensionKind parse_kind(std::string_view s) { return parse_enum(s, kKindNames, "dimension kind"); }
DimensionSource parse_source(std::string_view s) { return parse_enum(s, kSourceNames, "dimension source"); }

bool is_valid_dimension_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(),
                     [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
}

bool value_in_range(DimensionKind kind, double value) {
  if (!std::isfinite(value)) return false;
  switch (kind) {
    case DimensionKind::kBinary: return value == 0.0 || value == 1.0;
    case DimensionKind::kProportion: return value >= 0.0 && value <= 1.0;
    case DimensionKind::kCount: return value >= 0.0;
    case DimensionKind::kStars: return value >= 1.0 && value <= 5.0;
  }
  return false;
}

std::span<const GenreEntry> controlled_genres() { return kGenres; }

std::vector<std::string> genre_dimension_ids(std::span<const std::string> genre_strings) {
  std::set<std::string> ids;
  for (const auto& raw : genre_strings) {
    const std::string g = text::normalize(raw);
    for (const auto& entry : kGenres) {
      if (std::find(entry.synonyms.begin(), entry.synonyms.end(), g) != entry.synonyms.end()) {
        ids.insert("genre_" + std::string(entry.key));
      }
    }
  }
  return {ids.begin(), ids.end()};
}

AnnotationSchema::AnnotationSchema(std::vector<Dimension> dimensions, std::int64_t version)
    : dimensions_(std::move(dimensions)), version_(version) {
  std::set<std::string_view> seen;
  for (const auto& d : dimensions_) {
    if (!is_valid_dimension_id(d.id)) throw Error(ErrorCode::kInvalidId, "malformed dimension id '" + d.id + "'");
    if (!seen.insert(d.id).second) throw Error(ErrorCode::kDuplicateDimension, "duplicate dimension id '" + d.id + "'");
  }
  if (version_ < 1) throw Error(ErrorCode::kInvalidArgument, "schema version must be >= 1");
}

const Dimension* AnnotationSchema::find(std::string_view id) const {
  for (const auto& d : dimensions_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::vector<const Dimension*> AnnotationSchema::by_source(DimensionSource source) const {
  std::vector<const Dimension*> out;
  for (const auto& d : dimensions_) {
    if (d.source == source) out.push_back(&d);
  }
  return out;
}

std::vector<const Dimension*> AnnotationSchema::by_group(DimensionGroup group) const {
  std::vector<const Dimension*> out;
  for (const auto& d : dimensions_) {
    if (d.group == group) out.push_back(&d);
  }
  return out;
}

AnnotationSchema default_schema() {
  std::vector<Dimension> dims;
  dims.push_back({"gr_avg_rating", "Average Goodreads rating", DimensionGroup::kMetadata, DimensionKind::kStars,
                  DimensionSource::kGoodreadsMeta});
  dims.push_back({"gr_num_ratings", "Number of Goodreads ratings", DimensionGroup::kMetadata, DimensionKind::kCount,
                  DimensionSource::kGoodreadsMeta});
  dims.push_back({"num_pages", "Number of pages", DimensionGroup::kMetadata, DimensionKind::kCount,
                  DimensionSource::kGoodreadsMeta});
  for (const auto& g : kGenres) {
    dims.push_back({"genre_" + std::string(g.key), "Genre: " + std::string(g.label), DimensionGroup::kMetadata,
                    DimensionKind::kBinary, DimensionSource::kGoodreadsMeta});
  }
  add_rows(dims, kMentions, DimensionGroup::kCommentMention, DimensionKind::kProportion, DimensionSource::kComments);
  add_rows(dims, kTargets, DimensionGroup::kTargetGroup, DimensionKind::kBinary, DimensionSource::kBackendSummary);
  add_rows(dims, kStyles, DimensionGroup::kStyle, DimensionKind::kBinary, DimensionSource::kBackendSummary);
  add_rows(dims, kMoods, DimensionGroup::kMood, DimensionKind::kBinary, DimensionSource::kBackendSummary);
  add_rows(dims, kMainCharacter, DimensionGroup::kMainCharacter, DimensionKind::kBinary,
           DimensionSource::kBackendSummary);
  add_rows(dims, kThemes, DimensionGroup::kTheme, DimensionKind::kBinary, DimensionSource::kBackendSummary);
  add_rows(dims, kGoals, DimensionGroup::kCharacterGoal, DimensionKind::kBinary, DimensionSource::kBackendSummary);
  add_rows(dims, kStruggles, DimensionGroup::kStruggleAgainst, DimensionKind::kBinary,
           DimensionSource::kBackendSummary);
  add_rows(dims, kJournal, DimensionGroup::kJournalNote, DimensionKind::kBinary, DimensionSource::kJournal);
  return AnnotationSchema(std::move(dims), 1);
}

AnnotationSchema extend_schema(const AnnotationSchema& schema, std::vector<Dimension> new_dims) {
  if (new_dims.empty()) return schema;
  std::vector<Dimension> dims = schema.dimensions();
  for (auto& d : new_dims) {
    if (!is_valid_dimension_id(d.id)) throw Error(ErrorCode::kInvalidId, "malformed dimension id '" + d.id + "'");
    const bool clash = std::any_of(dims.begin(), dims.end(), [&](const Dimension& e) { return e.id == d.id; });
    if (clash) throw Error(ErrorCode::kDuplicateDimension, "dimension '" + d.id + "' already exists");
    d.group = DimensionGroup::kCustom;
    if (d.label.empty()) d.label = d.id;
    dims.push_back(std::move(d));
  }
  return AnnotationSchema(std::move(dims), schema.version() + 1);
}

void to_json(nlohmann::json& j, const Dimension& d) {
  j = nlohmann::json{{"id", d.id},
                     {"label", d.label},
                     {"group", to_string(d.group)},
                     {"kind", to_string(d.kind)},
                     {"source", to_string(d.source)}};
}

void from_json(const nlohmann::json& j, Dimension& d) {
  d.id = j.at("id").get<std::string>();
  d.label = j.value("label", d.id);
  d.group = parse_group(j.value("group", std::string("custom")));
  d.kind = parse_kind(j.at("kind").get<std::string>());
  d.source = parse_source(j.value("source", std::string("backend_summary")));
}

nlohmann::json schema_to_json(const AnnotationSchema& schema) {
  return nlohmann::json{{"format", "isaac-schema"}, {"version", schema.version()}, {"dimensions", schema.dimensions()}};
}

AnnotationSchema schema_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "isaac-schema") {
      throw Error(ErrorCode::kFormatError, "not an isaac schema document");
    }
    return AnnotationSchema(j.at("dimensions").get<std::vector<Dimension>>(), j.at("version").get<std::int64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("schema json: ") + e.what());
  }
}

}  // namespace isaac
