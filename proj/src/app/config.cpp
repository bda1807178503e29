#include "isaac/app/config.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "isaac/annotate/mock_backend.hpp"
#include "isaac/util/error.hpp"
#include "isaac/util/fs.hpp"
#include "isaac/util/text.hpp"

namespace isaac::app {
namespace {

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

long long integer(const std::string& key, const std::string& v, long long lo) {
  const auto d = text::parse_double(v);
  if (!d || *d != static_cast<double>(static_cast<long long>(*d)) || *d < static_cast<double>(lo)) {
    throw Error(ErrorCode::kInvalidArgument, "config " + key + " must be an integer >= " + std::to_string(lo));
  }
  return static_cast<long long>(*d);
}

}  // namespace

Config parse_config(std::string_view data, const std::filesystem::path& base_dir) {
  Config c;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(data, '\n')) {
    ++line_no;
    std::string_view line = raw;
    // A '#' outside quotes starts a comment.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::kFormatError, "config line " + std::to_string(line_no) + ": bad section");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kFormatError, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(text::trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    const std::string value = unquote(text::trim(line.substr(eq + 1)));

    if (key.ends_with("api_key")) {
      throw Error(ErrorCode::kInvalidArgument, "API keys are read from ISAAC_API_KEY only, not from the config file");
    }
    if (key == "backend.kind" || key == "backend") {
      if (value != "mock" && value != "http") throw Error(ErrorCode::kInvalidArgument, "backend must be mock or http");
      c.backend = value;
    } else if (key == "backend.mock_corpus") {
      c.mock_corpus = std::filesystem::path(value).is_absolute() || base_dir.empty() ? std::filesystem::path(value) : base_dir / value;
    } else if (key == "backend.endpoint") {
      c.http.endpoint = value;
    } else if (key == "backend.model") {
      c.http.model = value;
    } else if (key == "backend.requests_per_minute") {
      c.http.requests_per_minute = static_cast<int>(integer(key, value, 1));
    } else if (key == "backend.max_retries") {
      c.http.max_retries = static_cast<int>(integer(key, value, 0));
    } else if (key == "backend.backoff_ms") {
      c.http.backoff = std::chrono::milliseconds(integer(key, value, 0));
    } else if (key == "backend.timeout_seconds") {
      c.http.timeout_seconds = static_cast<int>(integer(key, value, 1));
    } else if (key == "run.workers") {
      c.workers = static_cast<int>(integer(key, value, 1));
    } else if (key == "run.threads") {
      c.threads = static_cast<int>(integer(key, value, 0));
    } else if (key == "run.seed") {
      c.seed = static_cast<std::uint64_t>(integer(key, value, 0));
    } else if (key == "run.min_n") {
      c.min_n = static_cast<std::size_t>(integer(key, value, 1));
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  return parse_config(fs::read_file(path), path.parent_path());
}

std::unique_ptr<annotate::AnnotationBackend> make_backend(const Config& config) {
  if (config.backend == "mock") {
    if (config.mock_corpus.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "the mock backend needs backend.mock_corpus in the config");
    }
    auto corpus = nlohmann::json::parse(fs::read_file(config.mock_corpus), nullptr, false);
    if (corpus.is_discarded()) throw Error(ErrorCode::kFormatError, "mock corpus is not valid JSON: " + config.mock_corpus.string());
    return std::make_unique<annotate::MockBackend>(corpus);
  }
  auto http = config.http;
  if (const char* key = std::getenv("ISAAC_API_KEY")) http.api_key = key;
  if (http.api_key.empty()) throw Error(ErrorCode::kBackendUnavailable, "ISAAC_API_KEY is not set");
  return std::make_unique<annotate::HttpBackend>(http);
}

}  // namespace isaac::app
