#pragma once

#include <cstdint>
#include <utility>

#include "hwanno/image.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno::preproc {

struct AugmentConfig {
  std::pair<double, double> stretch_range{0.75, 1.25};
  int max_shift = 3;
  double noise_sigma = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CanvasSpec {
  int width = 128;
  int height = 32;
  std::uint8_t fill = 255;

  void validate() const;
};

struct ResizedPage {
  GrayImage image;
  double scale = 1.0;  // resized = original * scale
};

struct Deslanted {
  GrayImage image;
  double shear = 0.0;
  double slope_degrees = 0.0;
};

// Candidate shear factors, -1.0 to +1.0 in steps of 0.2.
inline constexpr int kShearSteps = 11;
inline constexpr double kShearStep = 0.2;
double shear_candidate(int index);

// Page-level

// Fits the page inside 1280x720, preserving aspect ratio; scales up too.
ResizedPage resize_page(const GrayImage& img);

// Word-level

// Contrast stretch, tight crop around Otsu ink with a 2 px margin, then one
// 3x3 minimum filter pass. Throws Error(NoInk) on a uniform image.
GrayImage to_iam_style(const GrayImage& img);

// Slope correction followed by slant removal. Never throws; an image without
// ink comes back unchanged with shear 0.
Deslanted deslant(const GrayImage& img);

GrayImage fit_to_canvas(const GrayImage& img, const CanvasSpec& spec = {});

// Per-image standardisation into a (width, height) tensor, column-major with
// respect to the image so that each column is contiguous.
Tensor normalize(const GrayImage& img);

GrayImage augment(const GrayImage& img, const AugmentConfig& cfg,
                  const CanvasSpec& spec = {});

GrayImage damaged_placeholder(const CanvasSpec& spec = {});

// Building blocks, exposed for tests and for callers that need a single step.

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);
GrayImage contrast_stretch(const GrayImage& img);
// Ink is every pixel strictly below the returned value.
int otsu_threshold(const GrayImage& img);
GrayImage thicken(const GrayImage& img);
GrayImage shear_image(const GrayImage& img, double alpha);
// Vinciarelli-Luettin column statistic on the binarised image sheared by alpha.
double slant_score(const GrayImage& img, int ink_threshold, double alpha);
// Least-squares slope of the lowest ink pixel per column, in degrees (image y
// axis points down), clamped to +-10. Only columns near the dominant baseline
// take part in the fit.
double baseline_slope_degrees(const GrayImage& img, int ink_threshold);
GrayImage rotate_image(const GrayImage& img, double degrees);

// True when the crop already resembles an IAM scan: median intensity >= 240
// and at most 35% ink.
bool looks_iam_like(const GrayImage& img);

}  // namespace hwanno::preproc
