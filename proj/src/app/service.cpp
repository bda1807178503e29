#include "isaac/app/service.hpp"

#include <httplib.h>

#include "isaac/util/error.hpp"
#include "isaac/util/text.hpp"

namespace isaac::app {
namespace {

using nlohmann::json;

ServiceResponse error_response(int status, std::string_view code, const std::string& message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

ServiceResponse error_response(const Error& e) {
  return error_response(http_status(e.code()), code_name(e.code()), e.what());
}

json parse_body(const std::string& body) {
  if (text::trim(body).empty()) return json::object();
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::size_t query_size(const std::map<std::string, std::string>& query, const std::string& key, std::size_t fallback) {
  const auto it = query.find(key);
  if (it == query.end()) return fallback;
  const auto v = text::parse_double(it->second);
  if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
    throw Error(ErrorCode::kInvalidArgument, key + " must be a positive integer");
  }
  return static_cast<std::size_t>(*v);
}

json project_json(const Workspace& w) {
  const auto& s = w.state();
  json books = json::array();
  for (const auto& b : s.books) books.push_back(book_to_json(b));
  json candidates = json::array();
  for (const auto& b : s.candidates) candidates.push_back(book_to_json(b));
  json annotated = json::array();
  for (const auto& r : s.records) annotated.push_back(r.book_id);
  json events = json::array();
  for (const auto& e : s.events) events.push_back(event_to_json(e));
  const auto lock = w.lock_state();
  return {{"format_version", kProjectFormatVersion},
          {"seed", s.seed},
          {"schema", schema_to_json(s.schema)},
          {"books", books},
          {"candidates", candidates},
          {"annotated", annotated},
          {"expectations", expectations_to_json(s.expectations)},
          {"lock",
           {{"locked", lock.locked},
            {"has_expectations", lock.has_expectations},
            {"post_hoc", lock.post_hoc},
            {"effects_views", lock.effects_views}}},
          {"mask", recommend::mask_to_json(s.mask)},
          {"run_report", s.run_report},
          {"has_model_report", !s.model_report.is_null()},
          {"events", events}};
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kExpectationsLocked:
    case ErrorCode::kAlreadyRated:
    case ErrorCode::kSchemaVersionMismatch:
      return 409;
    case ErrorCode::kNoModel:
    case ErrorCode::kMissingRecord:
      return 404;
    case ErrorCode::kBackendUnavailable:
      return 503;
    case ErrorCode::kCorruptProject:
    case ErrorCode::kVersionTooNew:
    case ErrorCode::kIoError:
    case ErrorCode::kSingularSystem:
    case ErrorCode::kBindError:
      return 500;
    default:
      return 400;
  }
}

Service::Service(Workspace workspace, std::unique_ptr<annotate::AnnotationBackend> backend, Config config)
    : workspace_(std::move(workspace)), backend_(std::move(backend)), config_(std::move(config)) {
  publish();
  writer_ = std::thread([this] { writer_loop(); });
}

Service::~Service() {
  stop();
  {
    std::lock_guard lk(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (writer_.joinable()) writer_.join();
}

std::shared_ptr<const json> Service::snapshot() const {
  std::lock_guard lk(snapshot_mu_);
  return snapshot_;
}

void Service::publish() {
  auto next = std::make_shared<const json>(project_json(workspace_));
  std::lock_guard lk(snapshot_mu_);
  snapshot_ = std::move(next);
}

void Service::writer_loop() {
  for (;;) {
    Pending p;
    {
      std::unique_lock lk(queue_mu_);
      queue_cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      p = std::move(queue_.front());
      queue_.pop_front();
    }
    ServiceResponse r;
    const auto replay = p.key.empty() ? replays_.end() : replays_.find(p.key);
    if (replay != replays_.end()) {
      r = replay->second.fingerprint == p.fingerprint
              ? replay->second.response
              : error_response(422, "InvalidArgument", "idempotency key reused for a different request");
    } else {
      try {
        r = p.command(workspace_);
      } catch (const Error& e) {
        r = error_response(e);
      } catch (const std::exception& e) {
        r = error_response(500, "Internal", e.what());
      }
      if (!p.key.empty()) replays_[p.key] = {p.fingerprint, r};
      publish();
    }
    p.done.set_value(std::move(r));
  }
}

ServiceResponse Service::submit(std::string fingerprint, std::string key, Command command) {
  std::future<ServiceResponse> result;
  {
    std::lock_guard lk(queue_mu_);
    if (stopping_) return error_response(503, "BackendUnavailable", "service is shutting down");
    Pending p{std::move(fingerprint), std::move(key), std::move(command), {}};
    result = p.done.get_future();
    queue_.push_back(std::move(p));
  }
  queue_cv_.notify_one();
  return result.get();
}

ServiceResponse Service::handle(std::string_view method, std::string_view path, const std::string& body,
                                const std::map<std::string, std::string>& query, const std::string& idempotency_key) {
  try {
    if (method == "GET" && path == "/api/project") return {200, *snapshot()};

    std::string fingerprint = std::string(method) + " " + std::string(path) + "\n" + body;
    for (const auto& [k, v] : query) fingerprint += "\n" + k + "=" + v;
    const auto queued = [&](Command c) { return submit(fingerprint, idempotency_key, std::move(c)); };

    if (method == "GET") {
      const std::size_t min_n = query_size(query, "min_n", config_.min_n);
      if (path == "/api/effects") return queued([this, min_n](Workspace& w) { return get_effects(w, min_n); });
      if (path == "/api/concordance") return queued([this, min_n](Workspace& w) { return get_concordance(w, min_n); });
      if (path == "/api/model-report") return queued([this](Workspace& w) { return get_model_report(w); });
    } else if (method == "POST") {
      const json req = parse_body(body);
      if (path == "/api/ratings") return queued([this, req](Workspace& w) { return post_ratings(w, req); });
      if (path == "/api/annotate") return queued([this, req](Workspace& w) { return post_annotate(w, req); });
      if (path == "/api/expectations") return queued([this, req](Workspace& w) { return post_expectations(w, req); });
      if (path == "/api/mask") return queued([this, req](Workspace& w) { return post_mask(w, req); });
      if (path == "/api/recommend") {
        return queued([this, req](Workspace& w) { return post_recommend(w, req, recommend::Mode::kEnjoyment); });
      }
      if (path == "/api/explore") {
        return queued([this, req](Workspace& w) { return post_recommend(w, req, recommend::Mode::kExploration); });
      }
    }
    return error_response(404, "NotFound", std::string(method) + " " + std::string(path) + " is not an endpoint");
  } catch (const Error& e) {
    return error_response(e);
  }
}

ServiceResponse Service::post_ratings(Workspace& w, const json& req) {
  json out = json::object();
  if (req.contains("text")) {
    const auto format = ingest::parse_ratings_format(req.value("format", "auto"));
    const auto dnf = ingest::parse_dnf_policy(req.value("dnf", "include"));
    const bool candidates = req.value("candidates", false);
    const auto r = w.ingest_ratings(req.at("text").get<std::string>(), format, dnf, candidates);
    out["books"] = r.books.size();
    out["warnings"] = r.warnings;
    out["candidates"] = candidates;
  }
  if (req.contains("notes")) {
    const auto notes = w.attach_notes(req.at("notes").get<std::string>());
    out["notes_attached"] = notes.notes.size();
    out["notes_unmatched"] = notes.unmatched;
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "expected \"text\" and/or \"notes\"");
  return {200, out};
}

ServiceResponse Service::post_annotate(Workspace& w, const json& req) {
  if (!backend_) throw Error(ErrorCode::kBackendUnavailable, "no annotation backend configured");
  annotate::RunOptions opts;
  opts.workers = req.value("workers", config_.workers);
  if (req.contains("max_books")) opts.max_books = req.at("max_books").get<std::size_t>();
  if (req.contains("comments_dir")) opts.comments_dir = req.at("comments_dir").get<std::string>();
  return {200, annotate::run_report_to_json(w.annotate(*backend_, opts))};
}

ServiceResponse Service::get_effects(Workspace& w, std::size_t min_n) {
  const auto table = w.view_effects(min_n);
  auto j = stats::effects_json(table, &w.state().schema);
  j["effects_viewed_seq"] = w.state().events.back().seq;
  return {200, j};
}

ServiceResponse Service::post_expectations(Workspace& w, const json& req) {
  const bool post_hoc = req.value("post_hoc", false);
  const auto set = expectations_from_json(req.contains("expectations") ? req.at("expectations") : req);
  return {200, expectations_to_json(w.register_expectations(set, post_hoc))};
}

ServiceResponse Service::get_concordance(Workspace& w, std::size_t min_n) {
  return {200, stats::concordance_json(w.concordance(min_n))};
}

ServiceResponse Service::post_mask(Workspace& w, const json& req) {
  return {200, recommend::mask_to_json(w.set_mask(recommend::mask_from_json(req)))};
}

ServiceResponse Service::get_model_report(Workspace& w) {
  const auto& mr = w.state().model_report;
  const bool fresh = mr.is_object() && mr.value("excluded", std::set<std::string>{}) == w.state().mask.ids();
  if (fresh) return {200, mr};
  ModelEvalOptions opts;
  opts.cv.seed = w.state().seed;
  opts.cv.threads = config_.threads;
  return {200, w.evaluate_models(opts)};
}

ServiceResponse Service::post_recommend(Workspace& w, const json& req, recommend::Mode mode) {
  recommend::RecommendOptions opts;
  opts.k = req.value("k", opts.k);
  opts.include_journal = req.value("include_journal", false);
  opts.min_n = req.value("min_n", config_.min_n);
  opts.cv.seed = w.state().seed;
  opts.cv.threads = config_.threads;
  if (req.contains("model")) opts.model = predict::parse_model_kind(req.at("model").get<std::string>());
  auto j = recommend::result_to_json(w.recommend(mode, opts));
  j["mode"] = recommend::to_string(mode);
  j["excluded"] = w.state().mask.ids();
  return {200, j};
}

int Service::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  // No SO_REUSEPORT: a second service on a busy port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  const auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query(req.params.begin(), req.params.end());
    const auto r = handle(req.method, req.path, req.body, query, req.get_header_value("Idempotency-Key"));
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(R"(/api/.*)", forward);
  server_->Post(R"(/api/.*)", forward);
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    server_.reset();
    throw Error(ErrorCode::kBindError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Service::run() {
  if (!server_) throw Error(ErrorCode::kInvalidArgument, "bind() before run()");
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace isaac::app
