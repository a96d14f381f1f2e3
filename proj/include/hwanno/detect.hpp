#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "hwanno/archive.hpp"
#include "hwanno/image.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno::detect {

inline constexpr int kStride = 4;

// Raw detector output on a grid at 1/4 page resolution. score is (rows, cols);
// geometry is (5, rows, cols) holding d_top, d_right, d_bottom, d_left, theta.
struct ScoreGeoMaps {
  Tensor score;
  Tensor geometry;

  std::size_t rows() const { return score.dims.at(0); }
  std::size_t cols() const { return score.dims.at(1); }
  void validate() const;  // throws InvalidArgument
};

struct Point {
  double x = 0;
  double y = 0;
};

// Axis-aligned rectangle in page pixels.
struct Envelope {
  double x = 0, y = 0, w = 0, h = 0;
  double area() const { return w > 0 && h > 0 ? w * h : 0.0; }
};

struct RotatedBox {
  Point center;
  double width = 0;
  double height = 0;
  double angle = 0;  // radians, rotation of the box axes in image coordinates
  double score = 0;

  std::array<Point, 4> corners() const;  // tl, tr, br, bl before rotation
  Envelope envelope() const;
};

struct DetectConfig {
  double score_threshold = 0.5;
  double iou_threshold = 0.4;

  void validate() const;
};

std::vector<RotatedBox> decode_geometry(const ScoreGeoMaps& maps, double score_threshold);

// IoU of the axis-aligned envelopes.
double iou(const RotatedBox& a, const RotatedBox& b);

std::vector<RotatedBox> nms(std::vector<RotatedBox> boxes, double iou_threshold);

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual ScoreGeoMaps infer(const GrayImage& page) = 0;
};

// Replays maps pre-computed by an external detector and stored as SGM1.
class ArchiveBackend : public DetectorBackend {
 public:
  explicit ArchiveBackend(std::filesystem::path path);
  explicit ArchiveBackend(std::vector<std::uint8_t> bytes);
  ScoreGeoMaps infer(const GrayImage& page) override;

 private:
  std::optional<std::filesystem::path> path_;
  std::vector<std::uint8_t> bytes_;
};

class StubBackend : public DetectorBackend {
 public:
  explicit StubBackend(ScoreGeoMaps maps) : maps_(std::move(maps)) {}
  ScoreGeoMaps infer(const GrayImage&) override { return maps_; }

 private:
  ScoreGeoMaps maps_;
};

ScoreGeoMaps maps_from_archive(const TensorArchive& archive);
TensorArchive maps_to_archive(const ScoreGeoMaps& maps);

// Decodes and suppresses boxes for a page already passed through
// preproc::resize_page, then maps them back by dividing by page_scale.
std::vector<RotatedBox> run_detection(const GrayImage& resized_page, double page_scale,
                                      DetectorBackend& backend, const DetectConfig& cfg);

}  // namespace hwanno::detect
