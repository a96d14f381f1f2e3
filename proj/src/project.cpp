#include "hwanno/project.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hwanno/canonical_json.hpp"
#include "hwanno/error.hpp"
#include "json.hpp"

namespace hwanno::project {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Status, std::string_view> kStatusNames[] = {
    {Status::Detected, "detected"},     {Status::Edited, "edited"},
    {Status::Serialized, "serialized"}, {Status::Recognized, "recognized"},
    {Status::Finalized, "finalized"},
};

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
}

json box_to_json(const order::BoxRecord& b) {
  json j = {{"id", b.id.value},
            {"x", b.rect.x},
            {"y", b.rect.y},
            {"w", b.rect.w},
            {"h", b.rect.h},
            {"angle", b.angle},
            {"text_edited", b.text_edited}};
  if (b.score) j["score"] = *b.score;
  if (b.text) j["text"] = *b.text;
  return j;
}

order::BoxRecord box_from_json(const json& j) {
  order::BoxRecord b;
  b.id = order::BoxId{j.at("id").get<std::uint64_t>()};
  b.rect = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(),
            j.at("h").get<double>()};
  b.angle = j.at("angle").get<double>();
  b.text_edited = j.at("text_edited").get<bool>();
  if (j.contains("score")) b.score = j.at("score").get<double>();
  if (j.contains("text")) b.text = j.at("text").get<std::string>();
  return b;
}

void require_text(const Project& p) {
  const auto missing = missing_text(p);
  if (missing.empty()) return;
  std::vector<std::string> ids;
  for (auto id : missing) ids.push_back(order::to_string(id));
  std::string msg = "boxes without text:";
  for (const auto& s : ids) msg += " " + s;
  throw Error(ErrorCode::MissingText, msg, ids);
}

}  // namespace

std::string_view to_string(Status s) {
  for (const auto& [st, name] : kStatusNames)
    if (st == s) return name;
  return "unknown";
}

Status status_from_string(std::string_view s) {
  for (const auto& [st, name] : kStatusNames)
    if (name == s) return st;
  throw Error(ErrorCode::ParseError, "unknown status \"" + std::string(s) + "\"");
}

Project Project::create(PageInfo page) {
  Project p;
  p.layout = order::Page(page.width, page.height);
  p.page = std::move(page);
  return p;
}

// Appending a box leaves the layout stale, so the project must be serialised
// again. Other geometric edits keep the order valid but invalidate
// recognition results.
void Project::note_geometry_edit(bool appended_box) {
  switch (status) {
    case Status::Detected:
    case Status::Edited:
      status = Status::Edited;
      break;
    case Status::Serialized:
      if (appended_box) status = Status::Edited;
      break;
    case Status::Recognized:
    case Status::Finalized:
      status = appended_box ? Status::Edited : Status::Serialized;
      break;
  }
}

void Project::note_text_edit() {
  if (status == Status::Finalized) status = Status::Recognized;
}

std::string to_text(const Project& p) {
  json boxes = json::array();
  for (const auto& b : p.layout.boxes()) boxes.push_back(box_to_json(b));
  json seq = json::array();
  for (auto id : p.layout.layout().sequence()) seq.push_back(id.value);
  const json doc = {
      {"version", std::string(kFormatVersion)},
      {"page",
       {{"source", p.page.source},
        {"width", p.page.width},
        {"height", p.page.height},
        {"scale", p.page.scale}}},
      {"boxes", boxes},
      {"order", seq},
      {"status", std::string(to_string(p.status))},
  };
  return canonical_dump(doc) + "\n";
}

Project from_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("project: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "project: top level is not an object");
  if (!doc.contains("version")) throw Error(ErrorCode::ParseError, "project: missing version");
  const json& version = doc["version"];
  if (!version.is_string() || version.get<std::string>() != kFormatVersion)
    throw Error(ErrorCode::UnsupportedVersion, "project version " + version.dump() + " is not supported",
                {"supported: " + std::string(kFormatVersion)});

  Project p;
  std::vector<order::BoxRecord> boxes;
  std::vector<order::BoxId> sequence;
  try {
    const json& page = doc.at("page");
    p.page.source = page.at("source").get<std::string>();
    p.page.width = page.at("width").get<int>();
    p.page.height = page.at("height").get<int>();
    p.page.scale = page.at("scale").get<double>();
    for (const auto& b : doc.at("boxes")) boxes.push_back(box_from_json(b));
    for (const auto& id : doc.at("order")) sequence.push_back(order::BoxId{id.get<std::uint64_t>()});
    p.status = status_from_string(doc.at("status").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("project: ") + e.what());
  }
  if (p.page.width < 1 || p.page.height < 1)
    throw Error(ErrorCode::ValidationError, "page dimensions must be positive");
  if (!(p.page.scale > 0) || !std::isfinite(p.page.scale))
    throw Error(ErrorCode::ValidationError, "page scale must be positive");
  p.layout = order::Page::restore(p.page.width, p.page.height, std::move(boxes), std::move(sequence));
  return p;
}

void save(const Project& p, const fs::path& path) { write_file(path, to_text(p)); }

Project load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

std::vector<order::BoxId> missing_text(const Project& p) {
  std::vector<order::BoxId> out;
  for (auto id : p.layout.layout().sequence()) {
    const auto& text = p.layout.box(id).text;
    if (!text || text->empty()) out.push_back(id);
  }
  return out;
}

std::string transcript_text(const Project& p, const order::OrderConfig& cfg) {
  std::map<order::BoxId, std::size_t> line_of;
  const auto lines = p.layout.lines(cfg);
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (auto id : lines[i]) line_of[id] = i;

  std::string out;
  bool first = true;
  std::size_t prev_line = 0;
  for (auto id : p.layout.layout().sequence()) {
    const std::size_t line = line_of.at(id);
    if (!first) out += line == prev_line ? " " : "\n";
    out += p.layout.box(id).text.value_or("");
    prev_line = line;
    first = false;
  }
  if (!first) out += "\n";
  return out;
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f", v == 0 ? 0.0 : v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string annotations_tsv(const Project& p) {
  std::string out;
  std::size_t index = 0;
  for (auto id : p.layout.layout().sequence()) {
    const auto& b = p.layout.box(id);
    out += std::to_string(index++) + "\t" + order::to_string(id) + "\t" + format_number(b.rect.x) + "\t" +
           format_number(b.rect.y) + "\t" + format_number(b.rect.w) + "\t" + format_number(b.rect.h) +
           "\t" + b.text.value_or("") + "\n";
  }
  return out;
}

TranscriptFiles export_transcript(const Project& p, const fs::path& dir, const order::OrderConfig& cfg) {
  if (p.status < Status::Recognized)
    throw Error(ErrorCode::PhaseOrder,
                "transcript export needs a recognized project, status is " + std::string(to_string(p.status)));
  require_text(p);
  ensure_dir(dir);
  TranscriptFiles files{dir / "transcript.txt", dir / "annotations.tsv"};
  write_file(files.transcript, transcript_text(p, cfg));
  write_file(files.annotations, annotations_tsv(p));
  return files;
}

DatasetEntry crop_rect(const order::Rect& rect, int page_width, int page_height) {
  const int x0 = std::max(0, static_cast<int>(std::floor(rect.x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(rect.y)));
  const int x1 = std::min(page_width, static_cast<int>(std::ceil(rect.right())));
  const int y1 = std::min(page_height, static_cast<int>(std::ceil(rect.bottom())));
  if (x1 <= x0 || y1 <= y0) throw Error(ErrorCode::ZeroArea, "box lies outside the page");
  DatasetEntry e;
  e.x = x0;
  e.y = y0;
  e.w = x1 - x0;
  e.h = y1 - y0;
  return e;
}

std::vector<DatasetEntry> export_dataset(const Project& p, const GrayImage& page, const fs::path& dir) {
  if (p.status != Status::Finalized)
    throw Error(ErrorCode::PhaseOrder,
                "dataset export needs a finalized project, status is " + std::string(to_string(p.status)));
  require_text(p);
  if (page.width != p.page.width || page.height != p.page.height)
    throw Error(ErrorCode::ShapeMismatch, "page image is " + std::to_string(page.width) + "x" +
                                              std::to_string(page.height) + ", project expects " +
                                              std::to_string(p.page.width) + "x" +
                                              std::to_string(p.page.height));
  ensure_dir(dir);
  std::vector<DatasetEntry> entries;
  std::string manifest;
  std::size_t index = 0;
  for (auto id : p.layout.layout().sequence()) {
    const auto& b = p.layout.box(id);
    DatasetEntry e = crop_rect(b.rect, page.width, page.height);
    e.filename = "word_" + std::to_string(index++) + ".png";
    e.text = *b.text;
    write_png(crop(page, e.x, e.y, e.w, e.h), dir / e.filename);
    manifest += e.filename + "\t" + std::to_string(e.x) + "\t" + std::to_string(e.y) + "\t" +
                std::to_string(e.w) + "\t" + std::to_string(e.h) + "\t" + e.text + "\n";
    entries.push_back(std::move(e));
  }
  write_file(dir / "manifest.tsv", manifest);
  return entries;
}

}  // namespace hwanno::project
