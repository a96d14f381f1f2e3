#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hwanno/charset.hpp"
#include "hwanno/detect.hpp"
#include "hwanno/lexicon.hpp"
#include "hwanno/model.hpp"
#include "hwanno/project.hpp"
#include "hwanno/recognize.hpp"
#include "json.hpp"

// Workflow steps shared by the command line and the HTTP service, so both
// produce the same projects and files from the same inputs.
namespace hwanno::pipeline {

struct DetectedPage {
  project::Project project;
  GrayImage resized;  // the page as shown to the annotator
  std::optional<std::string> backend_error;
};

// Resizes the page and runs the backend when one is given. Without a backend,
// or when it fails, the project starts empty in status edited.
DetectedPage detect_page(const GrayImage& original, std::string source, detect::DetectorBackend* backend,
                         const detect::DetectConfig& cfg = {});

// Edits as exchanged with clients:
//   {"type":"add","x":..,"y":..,"w":..,"h":..}
//   {"type":"delete","id":..}
//   {"type":"update","id":..,"x":..,"y":..,"w":..,"h":..}
//   {"type":"swap","a":..,"b":..}
//   {"type":"set_text","id":..,"text":".."}
// Returns a description of the effect ({"box": ...} for add and update).
// Throws InvalidArgument on malformed edits and passes module errors through.
nlohmann::json apply_edit(project::Project& p, const nlohmann::json& edit);

nlohmann::json box_json(const order::BoxRecord& b);

// {"order": [ids], "lines": [[ids], ...]}
nlohmann::json serialize(project::Project& p, const order::OrderConfig& cfg = {});

struct Recognizer {
  ModelParams<float> params;
  CharSet charset;
  std::optional<lexicon::Dictionary> dictionary;
  RecognizeOptions options;
};

struct WordResult {
  std::string text;
  double log_prob = 0;
  bool no_ink = false;
  bool kept_edit = false;  // user text left untouched
};

// Recognises every ordered box from its crop of the original page, applies
// spell correction, and never overwrites text the user typed. Requires a
// serialized project.
std::map<order::BoxId, WordResult> recognize(project::Project& p, const GrayImage& original,
                                             const Recognizer& r);
nlohmann::json recognize_json(const std::map<order::BoxId, WordResult>& results);

struct FinalizeOutput {
  std::filesystem::path transcript;
  std::filesystem::path annotations;
  std::filesystem::path dataset_dir;
};

// Writes transcript.txt, annotations.tsv and dataset/ under out_dir and marks
// the project finalized. Re-running rewrites identical files.
FinalizeOutput finalize(project::Project& p, const GrayImage& original, const std::filesystem::path& out_dir,
                        const order::OrderConfig& cfg = {});

}  // namespace hwanno::pipeline
