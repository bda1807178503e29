#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "isaac/annotate/backend.hpp"
#include "isaac/annotate/http_backend.hpp"

namespace isaac::app {

// key = value lines, optional [section] headers (keys become
// "section.key"), '#' comments. Unknown keys are errors so typos surface.
//
//   [backend]
//   kind = mock            # or http
//   mock_corpus = corpus.json
//   endpoint = https://api.perplexity.ai
//   model = sonar-pro
//   requests_per_minute = 50
//   max_retries = 4
//   backoff_ms = 1000
//   timeout_seconds = 120
//   [run]
//   workers = 4
//   threads = 0
//   seed = 42
//   min_n = 3
//
// The API key is never read from the file; it comes from ISAAC_API_KEY.
struct Config {
  std::string backend = "mock";
  std::filesystem::path mock_corpus;
  annotate::HttpBackendConfig http;
  int workers = 1;
  int threads = 1;
  std::uint64_t seed = 42;
  std::size_t min_n = 3;
};

Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

// Mock backends read `mock_corpus`; http backends take the key from the
// environment.
std::unique_ptr<annotate::AnnotationBackend> make_backend(const Config& config);

}  // namespace isaac::app
