#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hwanno/detect.hpp"
#include "hwanno/order.hpp"
#include "hwanno/pipeline.hpp"

namespace hwanno::service {

struct ServiceConfig {
  std::filesystem::path out_root = "sessions";  // finalize writes <out_root>/<id>/
  std::optional<pipeline::Recognizer> recognizer;
  detect::DetectConfig detect;
  order::OrderConfig order;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Annotation sessions behind a transport-neutral request API. Each session
// admits one mutation at a time; reads share the session lock.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();

  // maps: optional SGM1 score/geometry archive for the page.
  Response create_session(std::span<const std::uint8_t> image, const std::string& filename,
                          const std::optional<std::vector<std::uint8_t>>& maps);
  Response get_session(const std::string& id);
  Response get_image(const std::string& id);
  Response post_edit(const std::string& id, const std::string& body);
  // phase is serialize, recognize or finalize. body may carry {"revision": n}.
  Response run_phase(const std::string& id, const std::string& phase, const std::string& body);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);

  ServiceConfig cfg_;
  std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

// HTTP binding of a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  int bind_any_port(const std::string& host);  // returns the port
  bool bind(const std::string& host, int port);
  void run();   // blocks until stop()
  void stop();
  void wait_until_ready();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hwanno::service
