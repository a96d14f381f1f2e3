#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "hwanno/archive.hpp"
#include "hwanno/service.hpp"
#include "httplib.h"
#include "scenario.hpp"

namespace workflows {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Relative paths that differ in presence or content between two trees.
inline std::vector<std::string> diff_trees(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diffs;
  auto files = [](const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto fa = files(a), fb = files(b);
  if (fa != fb) diffs.push_back("file lists differ");
  for (const auto& f : fa)
    if (std::find(fb.begin(), fb.end(), f) != fb.end() && slurp(a / f) != slurp(b / f)) diffs.push_back(f);
  return diffs;
}

// Runs an HttpServer on an ephemeral port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(hwanno::service::Service& svc) : server_(svc) {
    port_ = server_.bind_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.run(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }

 private:
  hwanno::service::HttpServer server_;
  std::thread thread_;
  int port_ = 0;
};

struct HttpRun {
  fs::path out_dir;
  std::vector<std::string> problems;
};

inline HttpRun run_http(const scenario::Page& page, const fs::path& out_root) {
  using namespace hwanno;
  service::ServiceConfig cfg;
  cfg.out_root = out_root;
  cfg.recognizer = pipeline::Recognizer{scenario::toy_model(), CharSet::iam(), std::nullopt, {}};
  service::Service svc(cfg);
  LiveServer live(svc);
  httplib::Client client("127.0.0.1", live.port());
  HttpRun run;
  auto expect = [&](const httplib::Result& r, int status, const std::string& what) -> json {
    if (!r) {
      run.problems.push_back(what + ": no response");
      return json::object();
    }
    if (r->status != status) run.problems.push_back(what + ": status " + std::to_string(r->status) + " " + r->body);
    return r->get_header_value("Content-Type") == "application/json" ? json::parse(r->body) : json::object();
  };

  const auto png = encode_png(page.image);
  const auto maps = detect::maps_to_archive(page.maps).serialize();
  httplib::MultipartFormDataItems form{
      {"image", std::string(png.begin(), png.end()), "page.png", "image/png"},
      {"maps", std::string(maps.begin(), maps.end()), "maps.sgm", "application/octet-stream"}};
  json created = expect(client.Post("/sessions", form), 201, "create");
  const std::string id = created.value("id", "");
  std::uint64_t revision = created.value("revision", 0);
  const std::string base = "/sessions/" + id;

  auto edit = [&](const json& e) {
    const json body = expect(client.Post(base + "/edits", json{{"revision", revision}, {"edit", e}}.dump(),
                                         "application/json"),
                             200, "edit " + e.dump());
    revision = body.value("revision", revision);
  };
  for (const auto& e : scenario::edits_before()) edit(e);
  revision = expect(client.Post(base + "/serialize", "", "application/json"), 200, "serialize").value("revision", revision);
  for (const auto& e : scenario::edits_after()) edit(e);
  expect(client.Post(base + "/recognize", json{{"revision", revision}}.dump(), "application/json"), 200, "recognize");
  expect(client.Post(base + "/finalize", "", "application/json"), 200, "finalize");
  run.out_dir = out_root / id;
  return run;
}

struct CliRun {
  fs::path out_dir;
  std::vector<std::string> problems;
};

inline CliRun run_cli(const scenario::Page& page, const fs::path& work) {
  using namespace hwanno;
  fs::create_directories(work);
  write_png(page.image, work / "page.png");
  detect::maps_to_archive(page.maps).save(work / "maps.sgm");
  save_params(scenario::toy_model(), work / "model.sgm");
  const std::string project = (work / "project.json").string();

  CliRun run;
  auto call = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) run.problems.push_back(args.front() + ": exit " + std::to_string(code) + " " + err.str());
  };
  call({"detect", (work / "page.png").string(), "--maps", (work / "maps.sgm").string(), "--out", project,
        "--source", "page.png"});
  for (const auto& e : scenario::edits_before()) call({"edit", project, e.dump()});
  call({"serialize", project});
  for (const auto& e : scenario::edits_after()) call({"edit", project, e.dump()});
  call({"recognize", project, "--model", (work / "model.sgm").string()});
  run.out_dir = work / "out";
  call({"export", project, "--out", run.out_dir.string()});
  return run;
}

}  // namespace workflows
