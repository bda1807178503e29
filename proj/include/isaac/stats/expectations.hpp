#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace isaac {

// A reader's introspective guess about one dimension: the sign of its
// correlation with enjoyment, optionally narrowed to a band in correlation
// units.
struct Expectation {
  int sign = 0;  // -1, 0 or +1
  std::optional<std::pair<double, double>> band;

  friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct ExpectationSet {
  std::map<std::string, Expectation> items;
  std::int64_t registered_at_ms = 0;
  bool locked = false;
  // Registered after effects had been shown; every output labels it so.
  bool post_hoc = false;

  bool empty() const { return items.empty(); }
  friend bool operator==(const ExpectationSet&, const ExpectationSet&) = default;
};

nlohmann::json expectations_to_json(const ExpectationSet& set);
// Accepts either the full document or a bare {"dimension": {"sign": ...}}
// map. Signs may be -1/0/1 or "-", "0", "+".
ExpectationSet expectations_from_json(const nlohmann::json& j);

}  // namespace isaac
