#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include "isaac/annotate/backend.hpp"
#include "isaac/annotate/rate_limit.hpp"

namespace isaac::annotate {

struct HttpBackendConfig {
  // Base URL; requests go to <endpoint>/chat/completions.
  std::string endpoint = "https://api.perplexity.ai";
  std::string model = "sonar-pro";
  std::string api_key;
  int requests_per_minute = 50;
  int max_retries = 4;
  std::chrono::milliseconds backoff{1000};  // doubled on every retry
  int timeout_seconds = 120;
  double temperature = 0.0;

  // Reads the key from ISAAC_API_KEY; nothing else comes from the
  // environment.
  static HttpBackendConfig from_env();
};

// Parses a research reply (see research_prompt) into a ResearchResult.
// MalformedResponse when the reply holds no JSON object.
ResearchResult parse_research_reply(std::string_view reply);

// OpenAI-compatible chat-completions client. 429, 5xx and connection
// failures are retried with exponential backoff; any other failure, or
// running out of retries, throws BackendUnavailable.
class HttpBackend : public AnnotationBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config, Clock* clock = nullptr);
  ~HttpBackend() override;

  std::string name() const override { return "http:" + config_.model; }
  ResearchResult research(const BookRef& book) override;
  std::string classify(const ClassifyRequest& request) override;

  // Sends one user message and returns the assistant content.
  std::string complete(const std::string& prompt);
  int retries() const { return retries_; }

 private:
  HttpBackendConfig config_;
  std::unique_ptr<SteadyClock> own_clock_;
  Clock* clock_;
  RateLimiter limiter_;
  std::string host_;
  std::string base_path_;
  std::atomic<int> retries_{0};
};

}  // namespace isaac::annotate
