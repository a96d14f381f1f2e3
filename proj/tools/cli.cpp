#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hwanno/canonical_json.hpp"
#include "hwanno/error.hpp"
#include "hwanno/pipeline.hpp"
#include "hwanno/service.hpp"
#include "hwanno/train.hpp"

namespace hwanno::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::PhaseOrder:
    case ErrorCode::MissingText:
    case ErrorCode::Conflict:
      return kPhaseError;
    default:
      return kInputError;
  }
}

// Raised for input problems found by the command layer itself.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

fs::path page_path(const project::Project& p, const fs::path& project_file, const std::string& override_page) {
  if (!override_page.empty()) return override_page;
  const fs::path source = p.page.source;
  if (source.is_relative() && !fs::exists(source)) {
    const fs::path beside = project_file.parent_path() / source;
    if (fs::exists(beside)) return beside;
  }
  return source;
}

struct RecognizerFlags {
  std::string model;
  std::string charset;
  std::string dict;
  int beam = 25;
  bool greedy = false;
};

pipeline::Recognizer load_recognizer(const RecognizerFlags& f) {
  pipeline::Recognizer r{load_params(f.model), f.charset.empty() ? CharSet::iam() : CharSet::load(f.charset),
                         std::nullopt, {}};
  if (!f.dict.empty()) r.dictionary = lexicon::Dictionary::load(f.dict);
  if (f.beam < 1) throw InputError("--beam must be >= 1");
  r.options.beam_width = f.beam;
  r.options.mode = f.greedy ? DecodeMode::Greedy : DecodeMode::Beam;
  return r;
}

void add_recognizer_flags(CLI::App* cmd, RecognizerFlags& f, bool model_required) {
  auto* model = cmd->add_option("--model", f.model, "model file (SGM1)")->check(CLI::ExistingFile);
  if (model_required) model->required();
  cmd->add_option("--charset", f.charset, "charset file, one character per line (default: built-in)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dict", f.dict, "frequency dictionary for spell correction")->check(CLI::ExistingFile);
  cmd->add_option("--beam", f.beam, "beam width")->capture_default_str();
  cmd->add_flag("--greedy", f.greedy, "best-path decoding instead of beam search");
}

std::string dump(const json& j) { return canonical_dump(j) + "\n"; }

struct TsvColumn {
  std::vector<std::string> ids;
  std::map<std::string, std::string> text;
};

// First field is the id, last field the text.
TsvColumn read_id_tsv(const fs::path& path) {
  TsvColumn col;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_tabs(lines[i]);
    const std::string& id = fields.front();
    const std::string text = fields.size() > 1 ? fields.back() : std::string();
    if (!col.text.emplace(id, text).second)
      throw InputError(path.string() + ":" + std::to_string(i + 1) + ": duplicate id " + id);
    col.ids.push_back(id);
  }
  return col;
}

std::vector<Sample> read_manifest(const fs::path& path) {
  std::vector<Sample> samples;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto fields = split_tabs(lines[i]);
    if (fields.size() < 2)
      throw InputError(path.string() + ":" + std::to_string(i + 1) + ": expected image<TAB>...<TAB>text");
    fs::path image = fields.front();
    if (image.is_relative()) image = path.parent_path() / image;
    samples.push_back({fields.front(), read_image(image), fields.back()});
  }
  return samples;
}

std::string format_cer(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Handwritten page annotation: detection, ordering, recognition and export", "hwanno"};
  app.set_config("--config", "", "INI/TOML file supplying option defaults");
  app.require_subcommand(1);

  double score_thresh = 0.5, iou_thresh = 0.4, line_overlap = 0.5;
  std::uint64_t seed = 0;
  auto detect_flags = [&](CLI::App* cmd) {
    cmd->add_option("--score-thresh", score_thresh, "minimum text score")->capture_default_str();
    cmd->add_option("--iou-thresh", iou_thresh, "NMS overlap threshold")->capture_default_str();
  };
  auto order_flags = [&](CLI::App* cmd) {
    cmd->add_option("--line-overlap", line_overlap, "vertical overlap ratio joining a line")
        ->capture_default_str();
  };

  // detect
  std::string page, maps, out_project, source;
  auto* detect_cmd = app.add_subcommand("detect", "decode detector maps for a page into a new project");
  detect_cmd->add_option("page", page, "page image")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--maps", maps, "SGM1 archive with score and geometry maps")->required();
  detect_cmd->add_option("--out", out_project, "project file to write")->required();
  detect_cmd->add_option("--source", source, "page path recorded in the project (default: page)");
  detect_flags(detect_cmd);

  // serialize
  std::string project_file;
  auto* serialize_cmd = app.add_subcommand("serialize", "compute the reading order");
  serialize_cmd->add_option("project", project_file, "project file, updated in place")->required();
  order_flags(serialize_cmd);

  // edit
  std::string edit_text;
  auto* edit_cmd = app.add_subcommand("edit", "apply one box or text edit");
  edit_cmd->add_option("project", project_file, "project file, updated in place")->required();
  edit_cmd->add_option("edit", edit_text, R"(edit object, e.g. {"type":"swap","a":1,"b":2})")->required();

  // recognize
  RecognizerFlags rec;
  std::string page_override;
  auto* recognize_cmd = app.add_subcommand("recognize", "transcribe every box in reading order");
  recognize_cmd->add_option("project", project_file, "project file, updated in place")->required();
  recognize_cmd->add_option("--page", page_override, "page image (default: the project source)");
  add_recognizer_flags(recognize_cmd, rec, true);

  // export
  std::string out_dir;
  auto* export_cmd = app.add_subcommand("export", "write transcript, annotations and word dataset");
  export_cmd->add_option("project", project_file, "project file, updated in place")->required();
  export_cmd->add_option("--out", out_dir, "output directory")->required();
  export_cmd->add_option("--page", page_override, "page image (default: the project source)");
  order_flags(export_cmd);

  // train
  std::string manifest, out_model, charset_path, log_path;
  TrainRunConfig run_cfg;
  bool compact = false;
  auto* train_cmd = app.add_subcommand("train", "train a recognition model");
  train_cmd->add_option("manifest", manifest, "TSV of image path ... text (paths relative to the manifest)")
      ->required();
  train_cmd->add_option("out", out_model, "model file to write (best validation epoch)")->required();
  train_cmd->add_option("--charset", charset_path, "charset file (default: built-in)")->check(CLI::ExistingFile);
  train_cmd->add_flag("--compact", compact, "narrow architecture for CPU training");
  train_cmd->add_option("--epochs", run_cfg.epochs)->capture_default_str();
  train_cmd->add_option("--lr", run_cfg.train.learning_rate, "initial learning rate")->capture_default_str();
  train_cmd->add_option("--lr-decay", run_cfg.train.lr_decay, "per-epoch decay factor")->capture_default_str();
  train_cmd->add_option("--batch", run_cfg.train.batch_size)->capture_default_str();
  train_cmd->add_option("--noise", run_cfg.train.noise_sigma, "training noise sigma")->capture_default_str();
  train_cmd->add_option("--clip", run_cfg.train.clip_norm, "gradient norm clip, 0 disables")->capture_default_str();
  train_cmd->add_option("--val-fraction", run_cfg.val_fraction)->capture_default_str();
  train_cmd->add_flag("--augment", run_cfg.augment, "random stretch, shift and noise per epoch");
  train_cmd->add_flag("--match-inference", run_cfg.match_inference,
                      "prepare training images exactly as recognition does");
  train_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  train_cmd->add_option("--log", log_path, "also write the epoch log to this file");

  // eval
  std::string pred_tsv, gt_tsv;
  auto* eval_cmd = app.add_subcommand("eval", "character error rate of predictions against ground truth");
  eval_cmd->add_option("pred", pred_tsv, "id<TAB>text predictions")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("gt", gt_tsv, "id<TAB>text ground truth")->required()->check(CLI::ExistingFile);

  // serve
  std::string host = "127.0.0.1", out_root = "sessions";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP annotation service");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--out-root", out_root, "finalize writes <out-root>/<session>/")->capture_default_str();
  add_recognizer_flags(serve_cmd, rec, false);
  detect_flags(serve_cmd);
  order_flags(serve_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  const detect::DetectConfig detect_cfg{score_thresh, iou_thresh};
  const order::OrderConfig order_cfg{line_overlap};

  try {
    if (*detect_cmd) {
      if (!fs::exists(maps)) {
        err << "error: maps not found: " << maps << "\n";
        return kInputError;
      }
      detect::ArchiveBackend backend{fs::path(maps)};
      auto detected = pipeline::detect_page(read_image(page), source.empty() ? page : source, &backend, detect_cfg);
      if (detected.backend_error) {
        err << "error: detector maps unusable: " << *detected.backend_error << "\n";
        return kInputError;
      }
      project::save(detected.project, out_project);
      out << "boxes=" << detected.project.layout.boxes().size() << "\n";
      return kOk;
    }
    if (*serialize_cmd) {
      auto p = project::load(project_file);
      const json result = pipeline::serialize(p, order_cfg);
      project::save(p, project_file);
      out << dump(result);
      return kOk;
    }
    if (*edit_cmd) {
      json edit;
      try {
        edit = json::parse(edit_text);
      } catch (const json::exception& e) {
        throw InputError(std::string("edit is not valid JSON: ") + e.what());
      }
      auto p = project::load(project_file);
      const json result = pipeline::apply_edit(p, edit);
      project::save(p, project_file);
      out << dump(result);
      return kOk;
    }
    if (*recognize_cmd) {
      auto p = project::load(project_file);
      // Phase errors take precedence over loading the model and page.
      if (p.status < project::Status::Serialized || p.layout.layout_stale())
        throw Error(ErrorCode::PhaseOrder, "recognition needs a serialized project, status is " +
                                               std::string(project::to_string(p.status)));
      const auto recognizer = load_recognizer(rec);
      const GrayImage original = read_image(page_path(p, project_file, page_override));
      const json result = pipeline::recognize_json(pipeline::recognize(p, original, recognizer));
      project::save(p, project_file);
      out << dump(result);
      return kOk;
    }
    if (*export_cmd) {
      auto p = project::load(project_file);
      if (p.status < project::Status::Recognized)
        throw Error(ErrorCode::PhaseOrder, "export needs a recognized project, status is " +
                                               std::string(project::to_string(p.status)));
      const GrayImage original = read_image(page_path(p, project_file, page_override));
      const auto files = pipeline::finalize(p, original, out_dir, order_cfg);
      project::save(p, project_file);
      out << dump({{"transcript_path", files.transcript.string()},
                   {"annotations_path", files.annotations.string()},
                   {"dataset_dir", files.dataset_dir.string()}});
      return kOk;
    }
    if (*train_cmd) {
      const auto samples = read_manifest(manifest);
      if (samples.empty()) throw InputError("manifest " + manifest + " lists no samples");
      const CharSet charset = charset_path.empty() ? CharSet::iam() : CharSet::load(charset_path);
      const int classes = static_cast<int>(charset.num_classes());
      run_cfg.model = compact ? ModelConfig::compact(classes) : ModelConfig::standard();
      run_cfg.model.num_classes = classes;
      run_cfg.train.seed = seed;
      std::ofstream log_file;
      if (!log_path.empty()) {
        log_file.open(log_path, std::ios::trunc);
        if (!log_file) throw InputError("cannot write " + log_path);
      }
      auto on_epoch = [&](const EpochLog& l) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "epoch=%d lr=%.6g loss=%.6f train_cer=%s val_cer=%s\n", l.epoch,
                      l.learning_rate, l.train_loss, format_cer(l.train_cer).c_str(),
                      format_cer(l.val_cer).c_str());
        out << buf << std::flush;
        if (log_file) log_file << buf << std::flush;
      };
      const auto outcome = train_model(samples, charset, run_cfg, on_epoch);
      for (const auto& name : outcome.skipped) err << "skipped: " << name << "\n";
      save_params(outcome.best, out_model);
      const auto& best = outcome.log.at(static_cast<std::size_t>(outcome.best_epoch - 1));
      out << "best_epoch=" << outcome.best_epoch << " train_cer=" << format_cer(best.train_cer)
          << " val_cer=" << format_cer(best.val_cer) << " train=" << outcome.train_indices.size()
          << " val=" << outcome.val_indices.size() << " skipped=" << outcome.skipped.size() << "\n";
      return kOk;
    }
    if (*eval_cmd) {
      const auto pred = read_id_tsv(pred_tsv);
      const auto gt = read_id_tsv(gt_tsv);
      std::vector<lexicon::EvalPair> pairs;
      for (const auto& id : gt.ids) {
        const auto it = pred.text.find(id);
        if (it == pred.text.end()) throw InputError("id mismatch: " + id + " has no prediction");
        pairs.push_back({gt.text.at(id), it->second});
      }
      for (const auto& id : pred.ids)
        if (!gt.text.count(id)) throw InputError("id mismatch: " + id + " has no ground truth");
      out << lexicon::format_report(lexicon::cer_report(pairs)) << "\n";
      return kOk;
    }
    if (*serve_cmd) {
      service::ServiceConfig cfg;
      cfg.out_root = out_root;
      cfg.detect = detect_cfg;
      cfg.order = order_cfg;
      if (!rec.model.empty()) cfg.recognizer = load_recognizer(rec);
      service::Service svc(std::move(cfg));
      service::HttpServer server(svc);
      if (!server.bind(host, port)) throw InputError("cannot bind " + host + ":" + std::to_string(port));
      out << "listening on " << host << ":" << port << "\n" << std::flush;
      server.run();
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    for (const auto& d : e.details()) err << "  " << d << "\n";
    return exit_code(e.code());
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace hwanno::cli
