#include "isaac/annotate/coerce.hpp"

#include <cmath>
#include <string>

#include "isaac/util/text.hpp"

namespace isaac::annotate {
namespace {

bool is_unknown(const std::string& s) {
  return s.empty() || s == "null" || s == "none" || s == "unknown" || s == "n/a" || s == "na";
}

Coerced number(DimensionKind kind, double v) {
  if (kind == DimensionKind::kCount && std::isfinite(v)) v = std::round(v);
  if (!value_in_range(kind, v)) return {};
  return {v, true};
}

}  // namespace

Coerced coerce_text(DimensionKind kind, std::string_view raw) {
  std::string s = text::to_lower(text::trim(raw));
  if (is_unknown(s)) return {std::nullopt, true};
  switch (kind) {
    case DimensionKind::kBinary:
      if (s == "1" || s == "1.0" || s == "yes" || s == "y" || s == "true") return {1.0, true};
      if (s == "0" || s == "0.0" || s == "no" || s == "n" || s == "false") return {0.0, true};
      return {};
    case DimensionKind::kProportion:
      if (s.ends_with('%')) {
        const auto v = text::parse_double(std::string_view(s).substr(0, s.size() - 1));
        return v ? number(kind, *v / 100.0) : Coerced{};
      }
      break;
    case DimensionKind::kCount: {
      std::string digits;
      for (char c : s) {
        if (c != ',') digits.push_back(c);
      }
      double scale = 1.0;
      if (digits.ends_with('k')) scale = 1e3;
      if (digits.ends_with('m')) scale = 1e6;
      if (scale != 1.0) digits.pop_back();
      const auto v = text::parse_double(digits);
      return v ? number(kind, *v * scale) : Coerced{};
    }
    case DimensionKind::kStars:
      if (s.ends_with("/5")) s.resize(s.size() - 2);
      break;
  }
  const auto v = text::parse_double(s);
  return v ? number(kind, *v) : Coerced{};
}

Coerced coerce_value(DimensionKind kind, const nlohmann::json& raw) {
  if (raw.is_null()) return {std::nullopt, true};
  if (raw.is_boolean()) {
    if (kind != DimensionKind::kBinary) return {};
    return {raw.get<bool>() ? 1.0 : 0.0, true};
  }
  if (raw.is_number()) return number(kind, raw.get<double>());
  if (raw.is_string()) return coerce_text(kind, raw.get<std::string>());
  return {};
}

std::optional<nlohmann::json> extract_json(std::string_view reply) {
  for (std::size_t start = 0; start < reply.size(); ++start) {
    const char open = reply[start];
    if (open != '{' && open != '[') continue;
    const char close = open == '{' ? '}' : ']';
    // Scan for the matching bracket outside string literals.
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < reply.size(); ++i) {
      const char c = reply[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{' || c == '[') ++depth;
      else if (c == '}' || c == ']') {
        if (--depth == 0) {
          if (c != close) break;
          auto parsed = nlohmann::json::parse(reply.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace isaac::annotate
