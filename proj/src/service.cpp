#include "hwanno/service.hpp"

#include <shared_mutex>

#include "hwanno/canonical_json.hpp"
#include "hwanno/error.hpp"
#include "httplib.h"

namespace hwanno::service {

using nlohmann::json;

struct Service::Session {
  std::string id;
  std::shared_mutex mu;
  project::Project project;
  GrayImage original;
  std::vector<std::uint8_t> resized_png;
  std::uint64_t revision = 1;
};

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::UnknownId:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::PhaseOrder:
    case ErrorCode::MissingText:
      return 409;
    case ErrorCode::IoFailure:
    case ErrorCode::BackendFailure:
      return 500;
    default:
      return 400;
  }
}

Response json_response(int status, const json& body) { return {status, canonical_dump(body) + "\n"}; }

Response error_response(const Error& e, std::optional<std::uint64_t> revision = std::nullopt) {
  json body = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"details", e.details()}};
  if (revision) body["revision"] = *revision;
  return json_response(http_status(e.code()), body);
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    json j = json::parse(body);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "request body must be an object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
  }
}

// Optimistic concurrency: a client revision, when given, must be current.
void check_revision(const json& body, std::uint64_t current, bool required) {
  if (!body.contains("revision")) {
    if (required) throw Error(ErrorCode::InvalidArgument, "missing revision");
    return;
  }
  const json& r = body.at("revision");
  if (!r.is_number_integer() && !r.is_number_unsigned())
    throw Error(ErrorCode::InvalidArgument, "revision must be an integer");
  if (r.get<std::int64_t>() < 0 || r.get<std::uint64_t>() != current)
    throw Error(ErrorCode::Conflict, "stale revision " + r.dump(),
                {"current revision " + std::to_string(current)});
}

json boxes_json(const project::Project& p) {
  json boxes = json::array();
  for (const auto& b : p.layout.boxes()) boxes.push_back(pipeline::box_json(b));
  return boxes;
}

}  // namespace

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.detect.validate();
  cfg_.order.validate();
}

Service::~Service() = default;

std::shared_ptr<Service::Session> Service::find(const std::string& id) {
  std::lock_guard lock(sessions_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session " + id);
  return it->second;
}

Response Service::create_session(std::span<const std::uint8_t> image, const std::string& filename,
                                 const std::optional<std::vector<std::uint8_t>>& maps) {
  try {
    auto session = std::make_shared<Session>();
    session->original = decode_image(image);
    std::unique_ptr<detect::DetectorBackend> backend;
    if (maps) backend = std::make_unique<detect::ArchiveBackend>(*maps);
    auto detected = pipeline::detect_page(session->original, filename, backend.get(), cfg_.detect);
    session->project = std::move(detected.project);
    session->resized_png = encode_png(detected.resized);
    {
      std::lock_guard lock(sessions_mu_);
      session->id = std::to_string(next_id_++);
      sessions_[session->id] = session;
    }
    json body = {{"id", session->id},
                 {"boxes", boxes_json(session->project)},
                 {"revision", session->revision},
                 {"status", std::string(project::to_string(session->project.status))}};
    if (detected.backend_error) body["backend_error"] = *detected.backend_error;
    return json_response(201, body);
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::get_session(const std::string& id) {
  try {
    auto s = find(id);
    std::shared_lock lock(s->mu);
    return json_response(200, {{"id", s->id},
                               {"revision", s->revision},
                               {"layout_stale", s->project.layout.layout_stale()},
                               {"project", json::parse(project::to_text(s->project))}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::get_image(const std::string& id) {
  try {
    auto s = find(id);
    std::shared_lock lock(s->mu);
    return {200, std::string(s->resized_png.begin(), s->resized_png.end()), "image/png"};
  } catch (const Error& e) {
    return error_response(e);
  }
}

Response Service::post_edit(const std::string& id, const std::string& body) {
  std::shared_ptr<Session> s;
  try {
    s = find(id);
  } catch (const Error& e) {
    return error_response(e);
  }
  std::unique_lock lock(s->mu);
  try {
    const json req = parse_body(body);
    check_revision(req, s->revision, true);
    if (!req.contains("edit")) throw Error(ErrorCode::InvalidArgument, "missing edit");
    // Apply to a copy so a failing edit leaves the session untouched.
    project::Project next = s->project;
    json result = pipeline::apply_edit(next, req.at("edit"));
    s->project = std::move(next);
    ++s->revision;
    result["revision"] = s->revision;
    result["status"] = std::string(project::to_string(s->project.status));
    return json_response(200, result);
  } catch (const Error& e) {
    return error_response(e, s->revision);
  }
}

Response Service::run_phase(const std::string& id, const std::string& phase, const std::string& body) {
  std::shared_ptr<Session> s;
  try {
    s = find(id);
  } catch (const Error& e) {
    return error_response(e);
  }
  std::unique_lock lock(s->mu);
  try {
    check_revision(parse_body(body), s->revision, false);
    project::Project next = s->project;
    json result;
    if (phase == "serialize") {
      result = pipeline::serialize(next, cfg_.order);
    } else if (phase == "recognize") {
      if (!cfg_.recognizer) throw Error(ErrorCode::InvalidArgument, "no recognition model is configured");
      result = pipeline::recognize_json(pipeline::recognize(next, s->original, *cfg_.recognizer));
    } else if (phase == "finalize") {
      const auto out = pipeline::finalize(next, s->original, cfg_.out_root / s->id, cfg_.order);
      result = {{"transcript_path", out.transcript.string()},
                {"annotations_path", out.annotations.string()},
                {"dataset_dir", out.dataset_dir.string()}};
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown phase " + phase);
    }
    s->project = std::move(next);
    ++s->revision;
    result["revision"] = s->revision;
    result["status"] = std::string(project::to_string(s->project.status));
    return json_response(200, result);
  } catch (const Error& e) {
    return error_response(e, s->revision);
  }
}

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;

  explicit Impl(Service& svc) : service(svc) {
    auto send = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_file("image")) {
        send(res, error_response(Error(ErrorCode::BadImage, "multipart field \"image\" is required")));
        return;
      }
      const auto image = req.get_file_value("image");
      std::optional<std::vector<std::uint8_t>> maps;
      if (req.has_file("maps")) {
        const auto m = req.get_file_value("maps");
        maps.emplace(m.content.begin(), m.content.end());
      }
      const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(image.content.data()),
                                                image.content.size());
      send(res, service.create_session(bytes, image.filename, maps));
    });
    server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service.get_session(req.matches[1]));
    });
    server.Get(R"(/sessions/([^/]+)/image)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service.get_image(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/edits)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, service.post_edit(req.matches[1], req.body));
    });
    server.Post(R"(/sessions/([^/]+)/(serialize|recognize|finalize))",
                [this, send](const httplib::Request& req, httplib::Response& res) {
                  send(res, service.run_phase(req.matches[1], req.matches[2], req.body));
                });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        send(res, error_response(e));
      } catch (const std::exception& e) {
        send(res, json_response(500, {{"code", "Internal"}, {"message", e.what()}, {"details", json::array()}}));
      }
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool HttpServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }
void HttpServer::run() { impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
void HttpServer::wait_until_ready() { impl_->server.wait_until_ready(); }

}  // namespace hwanno::service
