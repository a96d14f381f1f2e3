#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hwanno/image.hpp"
#include "hwanno/order.hpp"

namespace hwanno::project {

inline constexpr std::string_view kFormatVersion = "1";

enum class Status { Detected, Edited, Serialized, Recognized, Finalized };

std::string_view to_string(Status s);
Status status_from_string(std::string_view s);  // throws ParseError

struct PageInfo {
  std::string source;  // path of the original page image
  int width = 0;       // original pixels
  int height = 0;
  double scale = 1.0;  // resized page = original * scale
  friend bool operator==(const PageInfo&, const PageInfo&) = default;
};

// One annotated page. Box coordinates are in original page pixels.
struct Project {
  PageInfo page;
  order::Page layout;
  Status status = Status::Detected;

  static Project create(PageInfo page);

  // Status bookkeeping for the edit operations; see the .cpp for the rules.
  void note_geometry_edit(bool appended_box);
  void note_text_edit();

  friend bool operator==(const Project&, const Project&) = default;
};

// Canonical text form; equal projects give identical bytes.
std::string to_text(const Project& p);
// Throws ParseError, UnsupportedVersion or ValidationError.
Project from_text(std::string_view text);

void save(const Project& p, const std::filesystem::path& path);  // throws IoFailure
Project load(const std::filesystem::path& path);

// Ordered boxes whose text is absent or empty.
std::vector<order::BoxId> missing_text(const Project& p);

// Words joined by single spaces, one output line per line cluster, LF
// terminated.
std::string transcript_text(const Project& p, const order::OrderConfig& cfg = {});
// index, id, x, y, w, h, text; tab separated, one row per ordered box.
std::string annotations_tsv(const Project& p);

struct TranscriptFiles {
  std::filesystem::path transcript;
  std::filesystem::path annotations;
};

// Writes transcript.txt and annotations.tsv into dir. Requires status
// recognized or later (PhaseOrder) and text on every box (MissingText).
TranscriptFiles export_transcript(const Project& p, const std::filesystem::path& dir,
                                  const order::OrderConfig& cfg = {});

struct DatasetEntry {
  std::string filename;
  int x = 0, y = 0, w = 0, h = 0;  // crop rectangle in page pixels
  std::string text;
};

// Integer crop of a box: its rectangle rounded outwards and clipped to the
// page. Throws ZeroArea when nothing is left.
DatasetEntry crop_rect(const order::Rect& rect, int page_width, int page_height);

// word_<i>.png per ordered box plus manifest.tsv (filename, x, y, w, h, text).
// Requires status finalized. page is the original-resolution image.
std::vector<DatasetEntry> export_dataset(const Project& p, const GrayImage& page,
                                         const std::filesystem::path& dir);

// Number formatting shared by the TSV outputs: integers without decimals,
// everything else with up to six.
std::string format_number(double v);

}  // namespace hwanno::project
