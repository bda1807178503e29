#pragma once

#include <optional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "isaac/core/schema.hpp"

namespace isaac::annotate {

// Bumped whenever an accepted spelling is added or removed.
inline constexpr int kCoercionTableVersion = 1;

// ok == false: the raw value could not be read for this kind (retryable).
// ok == true with no value: an explicit unknown (null, "unknown", "n/a").
struct Coerced {
  std::optional<double> value;
  bool ok = false;
};

// Coercion table, version 1:
//   any kind   null, "", "null", "none", "unknown", "n/a", "na"  -> MISSING
//   binary     1, 0, true, false, "1", "0", "1.0", "0.0", "yes", "no",
//              "y", "n", "true", "false"
//   proportion number in [0, 1]; "0.25"; "25%"
//   count      non-negative number rounded to an integer; "1,234"; "12k";
//              "1.2m"
//   stars      number in [1, 5]; "4.2"; "4.2/5"
// Matching is case-insensitive and ignores surrounding whitespace. Anything
// else, including out-of-range numbers, is not ok.
Coerced coerce_value(DimensionKind kind, const nlohmann::json& raw);
Coerced coerce_text(DimensionKind kind, std::string_view raw);

// Pulls the first JSON object or array out of a model reply, tolerating code
// fences and surrounding prose.
std::optional<nlohmann::json> extract_json(std::string_view reply);

}  // namespace isaac::annotate
