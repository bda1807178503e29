#include "isaac/stats/expectations.hpp"

#include "isaac/util/error.hpp"

namespace isaac {
namespace {

int parse_sign(const nlohmann::json& v) {
  if (v.is_number_integer()) {
    const int s = v.get<int>();
    if (s >= -1 && s <= 1) return s;
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "+" || s == "positive" || s == "1" || s == "+1") return 1;
    if (s == "-" || s == "negative" || s == "-1") return -1;
    if (s == "0" || s == "none" || s == "neutral") return 0;
  }
  throw Error(ErrorCode::kFormatError, "expectation sign must be -1, 0, +1 or -, 0, +");
}

}  // namespace

nlohmann::json expectations_to_json(const ExpectationSet& set) {
  nlohmann::json items = nlohmann::json::object();
  for (const auto& [id, e] : set.items) {
    nlohmann::json j{{"sign", e.sign}};
    j["band"] = e.band ? nlohmann::json::array({e.band->first, e.band->second}) : nlohmann::json(nullptr);
    items[id] = j;
  }
  return nlohmann::json{{"items", items},
                        {"registered_at_ms", set.registered_at_ms},
                        {"locked", set.locked},
                        {"post_hoc", set.post_hoc}};
}

ExpectationSet expectations_from_json(const nlohmann::json& j) {
  ExpectationSet set;
  try {
    const nlohmann::json* items = &j;
    if (j.contains("items")) {
      items = &j.at("items");
      set.registered_at_ms = j.value("registered_at_ms", std::int64_t{0});
      set.locked = j.value("locked", false);
      set.post_hoc = j.value("post_hoc", false);
    }
    for (const auto& [id, v] : items->items()) {
      Expectation e;
      if (v.is_object()) {
        e.sign = parse_sign(v.at("sign"));
        if (v.contains("band") && !v.at("band").is_null()) {
          const auto& b = v.at("band");
          const double lo = b.at(0).get<double>();
          const double hi = b.at(1).get<double>();
          if (!(lo <= hi) || lo < -1.0 || hi > 1.0) {
            throw Error(ErrorCode::kFormatError, "expectation band for " + id + " must satisfy -1 <= lo <= hi <= 1");
          }
          e.band = std::make_pair(lo, hi);
        }
      } else {
        e.sign = parse_sign(v);
      }
      set.items[id] = e;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("expectations json: ") + e.what());
  }
  return set;
}

}  // namespace isaac
