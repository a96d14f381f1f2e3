#include "hwanno/preproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "hwanno/error.hpp"

namespace hwanno::preproc {

namespace {

constexpr double kEps = 1e-9;
constexpr int kCropMargin = 2;
constexpr double kMaxSlopeDegrees = 10.0;
// Rotations below this are sub-pixel across a word crop and are skipped.
constexpr double kMinSlopeDegrees = 0.5;
constexpr int kSlopeSearchSteps = 40;  // per side, 0.25 degree apart
constexpr double kBaselineBand = 1.0;  // px

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

int scaled_extent(int extent, double s, int limit) {
  const int v = static_cast<int>(std::floor(extent * s + kEps));
  return std::clamp(v, 1, limit);
}

double sample(const GrayImage& img, double fx, double fy, double fill) {
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0;
  const double ay = fy - y0;
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return fill;
    return img.at(x, y);
  };
  const double top = px(x0, y0) * (1 - ax) + px(x0 + 1, y0) * ax;
  const double bottom = px(x0, y0 + 1) * (1 - ax) + px(x0 + 1, y0 + 1) * ax;
  return top * (1 - ay) + bottom * ay;
}

void paste(GrayImage& canvas, const GrayImage& img, int ox, int oy) {
  for (int y = 0; y < img.height; ++y) {
    const int cy = y + oy;
    if (cy < 0 || cy >= canvas.height) continue;
    for (int x = 0; x < img.width; ++x) {
      const int cx = x + ox;
      if (cx < 0 || cx >= canvas.width) continue;
      canvas.at(cx, cy) = img.at(x, y);
    }
  }
}

struct ShearGeometry {
  int offset;  // added to every sheared x so that the result starts at 0
  int width;
};

ShearGeometry shear_geometry(int width, int height, double alpha) {
  const double bottom = height - 1;
  const double s_top = alpha * (0 - bottom);
  const double lo = std::min(0.0, s_top);
  const double hi = std::max(0.0, s_top);
  const int offset = static_cast<int>(-std::floor(lo + kEps));
  const int extra = static_cast<int>(std::ceil(hi - kEps));
  return {offset, width + offset + extra};
}

}  // namespace

void AugmentConfig::validate() const {
  if (!(stretch_range.first > 0 && stretch_range.first <= stretch_range.second))
    throw Error(ErrorCode::InvalidArgument, "stretch_range must satisfy 0 < low <= high");
  if (max_shift < 0) throw Error(ErrorCode::InvalidArgument, "max_shift must be >= 0");
  if (!(noise_sigma >= 0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
}

void CanvasSpec::validate() const {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::InvalidArgument, "canvas dimensions must be >= 1");
}

double shear_candidate(int index) { return -1.0 + kShearStep * index; }

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
  if (new_width == img.width && new_height == img.height) return img;
  GrayImage out(new_width, new_height);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    for (int x = 0; x < new_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      out.at(x, y) = clamp_u8(sample(img, fx, fy, 255.0));
    }
  }
  return out;
}

ResizedPage resize_page(const GrayImage& img) {
  constexpr int kWidth = 1280;
  constexpr int kHeight = 720;
  const double s = std::min(static_cast<double>(kWidth) / img.width,
                            static_cast<double>(kHeight) / img.height);
  const int w = scaled_extent(img.width, s, kWidth);
  const int h = scaled_extent(img.height, s, kHeight);
  return {resize_bilinear(img, w, h), s};
}

GrayImage contrast_stretch(const GrayImage& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const int lo = *lo_it;
  const int hi = *hi_it;
  if (lo == hi) throw Error(ErrorCode::NoInk, "uniform image");
  GrayImage out = img;
  for (auto& v : out.data) v = clamp_u8((v - lo) * 255.0 / (hi - lo));
  return out;
}

int otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (auto v : img.data) hist[v] += 1;
  const double total = static_cast<double>(img.data.size());
  double sum_all = 0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double w0 = 0, sum0 = 0, best = 0;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return best_t + 1;
}

GrayImage thicken(const GrayImage& img) {
  GrayImage out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      std::uint8_t m = 255;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) continue;
          m = std::min(m, img.at(xx, yy));
        }
      }
      out.at(x, y) = m;
    }
  }
  return out;
}

GrayImage to_iam_style(const GrayImage& img) {
  const GrayImage stretched = contrast_stretch(img);
  const int threshold = otsu_threshold(stretched);
  int x0 = stretched.width, y0 = stretched.height, x1 = -1, y1 = -1;
  for (int y = 0; y < stretched.height; ++y) {
    for (int x = 0; x < stretched.width; ++x) {
      if (stretched.at(x, y) < threshold) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
  }
  if (x1 < 0) throw Error(ErrorCode::NoInk, "no pixel below the Otsu threshold");
  const GrayImage tight =
      crop(stretched, x0 - kCropMargin, y0 - kCropMargin,
           x1 - x0 + 1 + 2 * kCropMargin, y1 - y0 + 1 + 2 * kCropMargin);
  return thicken(tight);
}

GrayImage shear_image(const GrayImage& img, double alpha) {
  if (alpha == 0.0) return img;
  const auto geo = shear_geometry(img.width, img.height, alpha);
  GrayImage out(geo.width, img.height);
  const double bottom = img.height - 1;
  for (int y = 0; y < img.height; ++y) {
    const double shift = alpha * (y - bottom) + geo.offset;
    for (int x = 0; x < geo.width; ++x)
      out.at(x, y) = clamp_u8(sample(img, x - shift, y, 255.0));
  }
  return out;
}

double slant_score(const GrayImage& img, int ink_threshold, double alpha) {
  const auto geo = shear_geometry(img.width, img.height, alpha);
  std::vector<int> count(geo.width, 0), first(geo.width, -1), last(geo.width, -1);
  const double bottom = img.height - 1;
  for (int y = 0; y < img.height; ++y) {
    const long shift = std::lround(alpha * (y - bottom)) + geo.offset;
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) >= ink_threshold) continue;
      const long xs = x + shift;
      if (xs < 0 || xs >= geo.width) continue;
      auto c = static_cast<std::size_t>(xs);
      if (first[c] < 0) first[c] = y;
      last[c] = y;
      ++count[c];
    }
  }
  double score = 0;
  for (int c = 0; c < geo.width; ++c) {
    if (count[c] > 0 && count[c] == last[c] - first[c] + 1)
      score += static_cast<double>(count[c]) * count[c];
  }
  return score;
}

double baseline_slope_degrees(const GrayImage& img, int ink_threshold) {
  std::vector<std::pair<double, double>> pts;
  for (int x = 0; x < img.width; ++x) {
    for (int y = img.height - 1; y >= 0; --y) {
      if (img.at(x, y) < ink_threshold) {
        pts.emplace_back(x, y);
        break;
      }
    }
  }
  if (pts.size() < 2) return 0.0;

  // Slanted strokes and descenders also leave lowest pixels; keep only the
  // columns on the line within the slope range that passes through most of
  // them, then fit those.
  int best_count = 0;
  double best_tan = 0, best_offset = 0;
  std::vector<double> r(pts.size());
  for (int step = 0; step <= 2 * kSlopeSearchSteps; ++step) {
    const int k = (step + 1) / 2 * (step % 2 ? 1 : -1);  // 0, 1, -1, 2, -2, ...
    const double t = std::tan(k * kMaxSlopeDegrees / kSlopeSearchSteps * std::numbers::pi / 180.0);
    for (std::size_t i = 0; i < pts.size(); ++i) r[i] = pts[i].second - t * pts[i].first;
    std::sort(r.begin(), r.end());
    for (std::size_t lo = 0, hi = 0; lo < r.size(); ++lo) {
      while (hi < r.size() && r[hi] - r[lo] <= kBaselineBand) ++hi;
      if (static_cast<int>(hi - lo) > best_count) {
        best_count = static_cast<int>(hi - lo);
        best_tan = t;
        best_offset = (r[lo] + r[hi - 1]) / 2;
      }
    }
  }

  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    if (std::abs(y - best_tan * x - best_offset) > kBaselineBand) continue;
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (n < 2 || denom <= 0) return 0.0;
  const double slope = (n * sxy - sx * sy) / denom;
  const double degrees = std::atan(slope) * 180.0 / std::numbers::pi;
  return std::clamp(degrees, -kMaxSlopeDegrees, kMaxSlopeDegrees);
}

GrayImage rotate_image(const GrayImage& img, double degrees) {
  if (degrees == 0.0) return img;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double w = img.width, h = img.height;
  const int out_w = std::max(1, static_cast<int>(std::ceil(std::abs(w * c) + std::abs(h * s) - kEps)));
  const int out_h = std::max(1, static_cast<int>(std::ceil(std::abs(w * s) + std::abs(h * c) - kEps)));
  GrayImage out(out_w, out_h);
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double ocx = (out_w - 1) / 2.0, ocy = (out_h - 1) / 2.0;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double dx = x - ocx, dy = y - ocy;
      // inverse rotation
      const double sxp = c * dx + s * dy + cx;
      const double syp = -s * dx + c * dy + cy;
      out.at(x, y) = clamp_u8(sample(img, sxp, syp, 255.0));
    }
  }
  return out;
}

Deslanted deslant(const GrayImage& img) {
  const int threshold = otsu_threshold(img);
  const bool has_ink = std::any_of(img.data.begin(), img.data.end(),
                                   [&](std::uint8_t v) { return v < threshold; });
  if (threshold <= 0 || !has_ink) return {img, 0.0, 0.0};

  Deslanted result{img, 0.0, 0.0};
  const double slope = baseline_slope_degrees(img, threshold);
  if (std::abs(slope) >= kMinSlopeDegrees) {
    result.image = rotate_image(img, -slope);
    result.slope_degrees = slope;
  }

  const int ink = otsu_threshold(result.image);
  // Visit candidates by increasing |alpha| so that ties keep the smallest.
  std::array<int, kShearSteps> order{};
  for (int i = 0; i < kShearSteps; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [](int a, int b) {
    const double ma = std::abs(shear_candidate(a)), mb = std::abs(shear_candidate(b));
    if (std::abs(ma - mb) > kEps) return ma < mb;
    return shear_candidate(a) < shear_candidate(b);
  });
  double best_score = -1;
  double best_alpha = 0;
  for (int idx : order) {
    double alpha = shear_candidate(idx);
    if (std::abs(alpha) < kEps) alpha = 0.0;
    const double score = slant_score(result.image, ink, alpha);
    if (score > best_score) {
      best_score = score;
      best_alpha = alpha;
    }
  }
  result.shear = best_alpha;
  result.image = shear_image(result.image, best_alpha);
  return result;
}

GrayImage fit_to_canvas(const GrayImage& img, const CanvasSpec& spec) {
  spec.validate();
  const double s = std::min(static_cast<double>(spec.width) / img.width,
                            static_cast<double>(spec.height) / img.height);
  const int w = scaled_extent(img.width, s, spec.width);
  const int h = scaled_extent(img.height, s, spec.height);
  GrayImage canvas(spec.width, spec.height, spec.fill);
  paste(canvas, resize_bilinear(img, w, h), 0, 0);
  return canvas;
}

Tensor normalize(const GrayImage& img) {
  const double n = static_cast<double>(img.data.size());
  double mean = 0;
  for (auto v : img.data) mean += v;
  mean /= n;
  double var = 0;
  for (auto v : img.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);

  Tensor out({static_cast<std::size_t>(img.width), static_cast<std::size_t>(img.height)});
  if (sd == 0) return out;
  for (int x = 0; x < img.width; ++x)
    for (int y = 0; y < img.height; ++y)
      out.at(x, y) = static_cast<float>((img.at(x, y) - mean) / sd);
  return out;
}

GrayImage augment(const GrayImage& img, const AugmentConfig& cfg,
                  const CanvasSpec& spec) {
  cfg.validate();
  spec.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> stretch(cfg.stretch_range.first,
                                                 cfg.stretch_range.second);
  const double f = cfg.stretch_range.first == cfg.stretch_range.second
                       ? cfg.stretch_range.first
                       : stretch(rng);
  const int stretched_w = std::max(1, static_cast<int>(std::lround(img.width * f)));
  const GrayImage stretched = resize_bilinear(img, stretched_w, img.height);

  std::uniform_int_distribution<int> shift(0, cfg.max_shift);
  const int dx = shift(rng);
  const int dy = shift(rng);

  const double s = std::min(static_cast<double>(spec.width) / stretched.width,
                            static_cast<double>(spec.height) / stretched.height);
  const GrayImage scaled =
      resize_bilinear(stretched, scaled_extent(stretched.width, s, spec.width),
                      scaled_extent(stretched.height, s, spec.height));
  GrayImage canvas(spec.width, spec.height, spec.fill);
  paste(canvas, scaled, dx, dy);

  if (cfg.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (auto& v : canvas.data) v = clamp_u8(v + noise(rng));
  }
  return canvas;
}

GrayImage damaged_placeholder(const CanvasSpec& spec) {
  spec.validate();
  return GrayImage(spec.width, spec.height, 0);
}

bool looks_iam_like(const GrayImage& img) {
  std::vector<std::uint8_t> sorted = img.data;
  const auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const int median = *mid;
  const int threshold = otsu_threshold(img);
  const auto ink = std::count_if(img.data.begin(), img.data.end(),
                                 [&](std::uint8_t v) { return v < threshold; });
  const double ink_fraction = static_cast<double>(ink) / img.data.size();
  return median >= 240 && ink_fraction <= 0.35;
}

}  // namespace hwanno::preproc
