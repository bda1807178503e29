#include "isaac/annotate/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "isaac/annotate/coerce.hpp"
#include "isaac/annotate/prompts.hpp"
#include "isaac/util/error.hpp"

namespace isaac::annotate {
namespace {

std::optional<double> number_or_null(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  return coerce_value(DimensionKind::kCount, obj.at(key)).value;
}

std::vector<std::string> strings(const nlohmann::json& obj, const char* key) {
  std::vector<std::string> out;
  if (!obj.contains(key) || !obj.at(key).is_array()) return out;
  for (const auto& v : obj.at(key)) {
    if (v.is_string()) out.push_back(v.get<std::string>());
  }
  return out;
}

bool transient(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig c;
  if (const char* key = std::getenv("ISAAC_API_KEY")) c.api_key = key;
  return c;
}

ResearchResult parse_research_reply(std::string_view reply) {
  const auto j = extract_json(reply);
  if (!j || !j->is_object()) throw Error(ErrorCode::kMalformedResponse, "research reply held no JSON object");
  ResearchResult r;
  for (const auto& site : strings(*j, "found_on")) {
    if (site == "wikipedia" || site == "goodreads" || site == "other_web") r.sources.found_on.insert(site);
  }
  r.sources.urls = strings(*j, "urls");
  if (j->contains("retrieved_at") && j->at("retrieved_at").is_string()) r.sources.retrieved_at = j->at("retrieved_at");
  if (j->contains("summary") && j->at("summary").is_string()) r.summary = j->at("summary");
  if (j->contains("metadata") && j->at("metadata").is_object()) {
    const auto& m = j->at("metadata");
    if (m.contains("avg_rating")) r.metadata.avg_rating = coerce_value(DimensionKind::kStars, m.at("avg_rating")).value;
    r.metadata.num_ratings = number_or_null(m, "num_ratings");
    r.metadata.pages = number_or_null(m, "pages");
    r.metadata.genres = strings(m, "genres");
  }
  if (j->contains("comments") && j->at("comments").is_array()) r.comments = strings(*j, "comments");
  return r;
}

HttpBackend::HttpBackend(HttpBackendConfig config, Clock* clock)
    : config_(std::move(config)),
      own_clock_(clock ? nullptr : std::make_unique<SteadyClock>()),
      clock_(clock ? clock : own_clock_.get()),
      limiter_(config_.requests_per_minute, *clock_) {
  // Split "scheme://host[:port]/base" so httplib gets the host part alone.
  const auto& url = config_.endpoint;
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "endpoint needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  host_ = url.substr(0, slash);
  base_path_ = slash == std::string::npos ? "" : url.substr(slash);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (config_.max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const std::string& prompt) {
  const nlohmann::json body{{"model", config_.model},
                            {"temperature", config_.temperature},
                            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string path = base_path_ + "/chat/completions";
  auto wait = config_.backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      ++retries_;
      clock_->sleep_for(wait);
      wait *= 2;
    }
    limiter_.acquire();
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    const auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (transient(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kBackendUnavailable, "HTTP " + std::to_string(res->status) + " from " + host_ + path);
    }
    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw Error(ErrorCode::kMalformedResponse, "completion body is not JSON");
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kMalformedResponse, "completion body has no choices[0].message.content");
    }
  }
  throw Error(ErrorCode::kBackendUnavailable,
              last_error + " after " + std::to_string(config_.max_retries + 1) + " attempts");
}

ResearchResult HttpBackend::research(const BookRef& book) { return parse_research_reply(complete(research_prompt(book))); }

std::string HttpBackend::classify(const ClassifyRequest& request) { return complete(request.prompt); }

}  // namespace isaac::annotate
