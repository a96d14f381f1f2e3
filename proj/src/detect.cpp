#include "hwanno/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "hwanno/error.hpp"

namespace hwanno::detect {

namespace {

enum Channel { kTop = 0, kRight = 1, kBottom = 2, kLeft = 3, kTheta = 4 };

Point rotate(double dx, double dy, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * dx - s * dy, s * dx + c * dy};
}

// Drops leading unit extents so (1, 5, H, W) and (5, H, W) are accepted alike.
Tensor squeeze_leading(Tensor t, std::size_t rank) {
  while (t.dims.size() > rank && t.dims.front() == 1) t.dims.erase(t.dims.begin());
  if (t.dims.size() != rank)
    throw Error(ErrorCode::ParseError, "unexpected map rank " + shape_string(t.dims));
  return t;
}

bool ranks_before(const RotatedBox& a, const RotatedBox& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.center.x != b.center.x) return a.center.x < b.center.x;
  return a.center.y < b.center.y;
}

}  // namespace

void ScoreGeoMaps::validate() const {
  if (score.rank() != 2 || geometry.rank() != 3 || geometry.dims[0] != 5 ||
      geometry.dims[1] != score.dims[0] || geometry.dims[2] != score.dims[1])
    throw Error(ErrorCode::InvalidArgument,
                "score " + shape_string(score.dims) + " and geometry " +
                    shape_string(geometry.dims) + " do not describe one grid");
  for (float v : score.data)
    if (!(v >= 0.0f && v <= 1.0f))
      throw Error(ErrorCode::InvalidArgument, "score outside [0, 1]");
  const std::size_t plane = rows() * cols();
  for (std::size_t i = 0; i < 4 * plane; ++i)
    if (!(geometry.data[i] >= 0.0f))
      throw Error(ErrorCode::InvalidArgument, "negative edge distance");
}

void DetectConfig::validate() const {
  if (!(score_threshold >= 0 && score_threshold <= 1) ||
      !(iou_threshold >= 0 && iou_threshold <= 1))
    throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0, 1]");
}

std::array<Point, 4> RotatedBox::corners() const {
  const double hw = width / 2, hh = height / 2;
  const std::array<Point, 4> local{{{-hw, -hh}, {hw, -hh}, {hw, hh}, {-hw, hh}}};
  std::array<Point, 4> out{};
  for (std::size_t k = 0; k < 4; ++k) {
    const Point r = rotate(local[k].x, local[k].y, angle);
    out[k] = {center.x + r.x, center.y + r.y};
  }
  return out;
}

Envelope RotatedBox::envelope() const {
  if (angle == 0.0) return {center.x - width / 2, center.y - height / 2, width, height};
  const auto pts = corners();
  double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0, y1 - y0};
}

std::vector<RotatedBox> decode_geometry(const ScoreGeoMaps& maps, double score_threshold) {
  maps.validate();
  const std::size_t rows = maps.rows(), cols = maps.cols(), plane = rows * cols;
  std::vector<RotatedBox> boxes;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t cell = i * cols + j;
      const double score = maps.score.data[cell];
      if (score < score_threshold) continue;
      auto g = [&](Channel ch) -> double { return maps.geometry.data[ch * plane + cell]; };
      const double top = g(kTop), right = g(kRight), bottom = g(kBottom), left = g(kLeft);
      const double theta = g(kTheta);
      const double w = left + right, h = top + bottom;
      if (w <= 0 || h <= 0) continue;
      const Point anchor{static_cast<double>(kStride * j), static_cast<double>(kStride * i)};
      // Centre offset in the box frame, rotated about the anchor.
      const Point off = rotate((right - left) / 2, (bottom - top) / 2, theta);
      boxes.push_back({{anchor.x + off.x, anchor.y + off.y}, w, h, theta, score});
    }
  }
  return boxes;
}

double iou(const RotatedBox& a, const RotatedBox& b) {
  const Envelope ea = a.envelope(), eb = b.envelope();
  const double ix = std::min(ea.x + ea.w, eb.x + eb.w) - std::max(ea.x, eb.x);
  const double iy = std::min(ea.y + ea.h, eb.y + eb.h) - std::max(ea.y, eb.y);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = ea.area() + eb.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<RotatedBox> nms(std::vector<RotatedBox> boxes, double iou_threshold) {
  std::sort(boxes.begin(), boxes.end(), ranks_before);
  std::vector<RotatedBox> kept;
  std::vector<bool> suppressed(boxes.size(), false);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(boxes[i]);
    for (std::size_t j = i + 1; j < boxes.size(); ++j)
      if (!suppressed[j] && iou(boxes[i], boxes[j]) >= iou_threshold) suppressed[j] = true;
  }
  return kept;
}

ScoreGeoMaps maps_from_archive(const TensorArchive& archive) {
  ScoreGeoMaps maps{squeeze_leading(archive.get("score"), 2),
                    squeeze_leading(archive.get("geometry"), 3)};
  maps.validate();
  return maps;
}

TensorArchive maps_to_archive(const ScoreGeoMaps& maps) {
  TensorArchive archive;
  archive.add("score", maps.score);
  archive.add("geometry", maps.geometry);
  return archive;
}

ArchiveBackend::ArchiveBackend(std::filesystem::path path) : path_(std::move(path)) {}
ArchiveBackend::ArchiveBackend(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

ScoreGeoMaps ArchiveBackend::infer(const GrayImage&) {
  try {
    if (path_) return maps_from_archive(TensorArchive::load(*path_));
    return maps_from_archive(TensorArchive::parse(bytes_));
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendFailure, std::string("map archive: ") + e.what());
  }
}

std::vector<RotatedBox> run_detection(const GrayImage& resized_page, double page_scale,
                                      DetectorBackend& backend, const DetectConfig& cfg) {
  cfg.validate();
  if (!(page_scale > 0)) throw Error(ErrorCode::InvalidArgument, "page scale must be > 0");
  ScoreGeoMaps maps;
  try {
    maps = backend.infer(resized_page);
    maps.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendFailure) throw;
    throw Error(ErrorCode::BackendFailure, std::string("detector backend: ") + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BackendFailure, std::string("detector backend: ") + e.what());
  }
  auto boxes = nms(decode_geometry(maps, cfg.score_threshold), cfg.iou_threshold);
  for (auto& b : boxes) {
    b.center.x /= page_scale;
    b.center.y /= page_scale;
    b.width /= page_scale;
    b.height /= page_scale;
  }
  return boxes;
}

}  // namespace hwanno::detect
