#include "hwanno/pipeline.hpp"

#include "hwanno/error.hpp"
#include "hwanno/preproc.hpp"

namespace hwanno::pipeline {

using nlohmann::json;

namespace {

const json& field(const json& edit, const char* name) {
  if (!edit.contains(name)) throw Error(ErrorCode::InvalidArgument, std::string("edit is missing \"") + name + "\"");
  return edit.at(name);
}

double number(const json& edit, const char* name) {
  const json& v = field(edit, name);
  if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, std::string("edit field \"") + name + "\" must be a number");
  return v.get<double>();
}

order::BoxId box_id(const json& edit, const char* name) {
  const json& v = field(edit, name);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw Error(ErrorCode::InvalidArgument, std::string("edit field \"") + name + "\" must be a box id");
  return order::BoxId{v.get<std::uint64_t>()};
}

order::Rect rect(const json& edit) {
  return {number(edit, "x"), number(edit, "y"), number(edit, "w"), number(edit, "h")};
}

}  // namespace

DetectedPage detect_page(const GrayImage& original, std::string source, detect::DetectorBackend* backend,
                         const detect::DetectConfig& cfg) {
  cfg.validate();
  auto resized = preproc::resize_page(original);
  DetectedPage out{project::Project::create({std::move(source), original.width, original.height, resized.scale}),
                   std::move(resized.image), std::nullopt};
  out.project.status = project::Status::Edited;
  if (!backend) return out;
  std::vector<detect::RotatedBox> boxes;
  try {
    boxes = detect::run_detection(out.resized, resized.scale, *backend, cfg);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BackendFailure) throw;
    out.backend_error = e.what();
    return out;
  }
  for (const auto& b : boxes) {
    const auto env = b.envelope();
    try {
      out.project.layout.add_box({env.x, env.y, env.w, env.h}, b.score, b.angle);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroArea) throw;  // entirely off the page
    }
  }
  out.project.status = project::Status::Detected;
  return out;
}

json box_json(const order::BoxRecord& b) {
  json j = {{"id", b.id.value},   {"x", b.rect.x},         {"y", b.rect.y},
            {"w", b.rect.w},      {"h", b.rect.h},         {"angle", b.angle},
            {"text_edited", b.text_edited}};
  j["score"] = b.score ? json(*b.score) : json(nullptr);
  j["text"] = b.text ? json(*b.text) : json(nullptr);
  return j;
}

json apply_edit(project::Project& p, const json& edit) {
  if (!edit.is_object()) throw Error(ErrorCode::InvalidArgument, "edit must be an object");
  const json& type = field(edit, "type");
  if (!type.is_string()) throw Error(ErrorCode::InvalidArgument, "edit type must be a string");
  const std::string kind = type.get<std::string>();
  auto& page = p.layout;

  if (kind == "add") {
    const auto& b = page.add_box(rect(edit));
    p.note_geometry_edit(true);
    return {{"box", box_json(b)}};
  }
  if (kind == "delete") {
    page.delete_box(box_id(edit, "id"));
    p.note_geometry_edit(false);
    return json::object();
  }
  if (kind == "update") {
    const auto& b = page.update_box(box_id(edit, "id"), rect(edit));
    p.note_geometry_edit(false);
    return {{"box", box_json(b)}};
  }
  if (kind == "swap") {
    page.swap(box_id(edit, "a"), box_id(edit, "b"));
    p.note_geometry_edit(false);
    return json::object();
  }
  if (kind == "set_text") {
    const json& text = field(edit, "text");
    if (!text.is_string()) throw Error(ErrorCode::InvalidArgument, "text must be a string");
    const std::string s = text.get<std::string>();
    if (s.find_first_of("\t\r\n") != std::string::npos)
      throw Error(ErrorCode::InvalidArgument, "text may not contain tabs or line breaks");
    page.set_text(box_id(edit, "id"), s, true);
    p.note_text_edit();
    return json::object();
  }
  throw Error(ErrorCode::InvalidArgument, "unknown edit type \"" + kind + "\"",
              {"expected one of add, delete, update, swap, set_text"});
}

json serialize(project::Project& p, const order::OrderConfig& cfg) {
  cfg.validate();
  const auto& layout = p.layout.serialize(cfg);
  if (p.status < project::Status::Serialized) p.status = project::Status::Serialized;
  json order = json::array();
  for (auto id : layout.sequence()) order.push_back(id.value);
  json lines = json::array();
  for (const auto& line : p.layout.lines(cfg)) {
    json ids = json::array();
    for (auto id : line) ids.push_back(id.value);
    lines.push_back(ids);
  }
  return {{"order", order}, {"lines", lines}};
}

std::map<order::BoxId, WordResult> recognize(project::Project& p, const GrayImage& original,
                                             const Recognizer& r) {
  if (p.status < project::Status::Serialized || p.layout.layout_stale())
    throw Error(ErrorCode::PhaseOrder, "recognition needs a serialized project, status is " +
                                           std::string(project::to_string(p.status)));
  if (original.width != p.page.width || original.height != p.page.height)
    throw Error(ErrorCode::ShapeMismatch, "page image does not match the project");

  std::map<order::BoxId, WordResult> results;
  for (auto id : p.layout.layout().sequence()) {
    const auto& box = p.layout.box(id);
    WordResult w;
    if (box.text_edited) {
      w.text = box.text.value_or("");
      w.kept_edit = true;
      results[id] = w;
      continue;
    }
    const auto c = project::crop_rect(box.rect, original.width, original.height);
    const Recognition rec = recognize_word(crop(original, c.x, c.y, c.w, c.h), r.params, r.charset, r.options);
    w.log_prob = rec.log_prob;
    w.no_ink = rec.no_ink;
    w.text = r.dictionary ? lexicon::correct(rec.text, *r.dictionary) : rec.text;
    p.layout.set_text(id, w.text, false);
    results[id] = w;
  }
  p.status = project::Status::Recognized;
  return results;
}

json recognize_json(const std::map<order::BoxId, WordResult>& results) {
  json texts = json::object(), scores = json::object(), flags = json::object();
  for (const auto& [id, w] : results) {
    const std::string key = order::to_string(id);
    texts[key] = w.text;
    scores[key] = w.kept_edit ? json(nullptr) : json(w.log_prob);
    json f = json::array();
    if (w.no_ink) f.push_back("no_ink");
    if (w.kept_edit) f.push_back("user_text");
    flags[key] = f;
  }
  return {{"texts", texts}, {"scores", scores}, {"flags", flags}};
}

FinalizeOutput finalize(project::Project& p, const GrayImage& original, const std::filesystem::path& out_dir,
                        const order::OrderConfig& cfg) {
  if (p.status < project::Status::Recognized)
    throw Error(ErrorCode::PhaseOrder, "finalize needs a recognized project, status is " +
                                           std::string(project::to_string(p.status)));
  project::Project done = p;
  done.status = project::Status::Finalized;
  const auto files = project::export_transcript(done, out_dir, cfg);
  const auto dataset = out_dir / "dataset";
  project::export_dataset(done, original, dataset);
  p = std::move(done);
  return {files.transcript, files.annotations, dataset};
}

}  // namespace hwanno::pipeline
