#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "isaac/annotate/backend.hpp"
#include "isaac/app/config.hpp"
#include "isaac/app/project.hpp"
#include "isaac/util/error.hpp"

namespace httplib {
class Server;
}

namespace isaac::app {

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

// HTTP status for an error code; 500 for codes that indicate a bug or a
// damaged project.
int http_status(ErrorCode code);

// JSON API over a Workspace. Mutations (and reads that log events, such as
// /api/effects) run one at a time on a dedicated writer thread; plain reads
// answer from the last published snapshot and never wait for the writer.
//
// A request carrying an Idempotency-Key header is executed at most once:
// repeating the key with the same method, path and body replays the stored
// response, reusing it for a different request is a 422.
class Service {
 public:
  Service(Workspace workspace, std::unique_ptr<annotate::AnnotationBackend> backend, Config config = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Transport-free entry point; the HTTP server forwards to it.
  ServiceResponse handle(std::string_view method, std::string_view path, const std::string& body,
                         const std::map<std::string, std::string>& query = {},
                         const std::string& idempotency_key = {});

  // BindError when the address cannot be bound. Port 0 picks a free port;
  // the bound port is returned.
  int bind(const std::string& host, int port);
  // Serves until stop(); bind() first.
  void run();
  void stop();

  std::shared_ptr<const nlohmann::json> snapshot() const;

 private:
  using Command = std::function<ServiceResponse(Workspace&)>;

  ServiceResponse submit(std::string fingerprint, std::string key, Command command);
  void writer_loop();
  void publish();

  ServiceResponse post_ratings(Workspace& w, const nlohmann::json& req);
  ServiceResponse post_annotate(Workspace& w, const nlohmann::json& req);
  ServiceResponse get_effects(Workspace& w, std::size_t min_n);
  ServiceResponse post_expectations(Workspace& w, const nlohmann::json& req);
  ServiceResponse get_concordance(Workspace& w, std::size_t min_n);
  ServiceResponse post_mask(Workspace& w, const nlohmann::json& req);
  ServiceResponse get_model_report(Workspace& w);
  ServiceResponse post_recommend(Workspace& w, const nlohmann::json& req, recommend::Mode mode);

  Workspace workspace_;  // touched only by the writer thread
  std::unique_ptr<annotate::AnnotationBackend> backend_;
  Config config_;

  struct Pending {
    std::string fingerprint;
    std::string key;
    Command command;
    std::promise<ServiceResponse> done;
  };
  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Pending> queue_;
  bool stopping_ = false;

  struct Replay {
    std::string fingerprint;
    ServiceResponse response;
  };
  std::map<std::string, Replay> replays_;  // writer thread only

  mutable std::mutex snapshot_mu_;
  std::shared_ptr<const nlohmann::json> snapshot_;

  std::unique_ptr<httplib::Server> server_;
  std::thread writer_;
};

}  // namespace isaac::app
