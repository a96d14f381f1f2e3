#include <cmath>
#include <random>

#include "doctest.h"
#include "hwanno/error.hpp"
#include "hwanno/preproc.hpp"
#include "strokes.hpp"

using namespace hwanno;
using namespace hwanno::preproc;

namespace {

GrayImage random_image(int w, int h, std::mt19937_64& rng) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> v(0, 255);
  for (auto& p : img.data) p = static_cast<std::uint8_t>(v(rng));
  return img;
}

int count_below(const GrayImage& img, int t) {
  return static_cast<int>(std::count_if(img.data.begin(), img.data.end(), [&](auto v) { return v < t; }));
}

}  // namespace

TEST_CASE("resize_page fits inside 1280x720") {
  auto r = resize_page(GrayImage(1280, 720));
  CHECK(r.image.width == 1280);
  CHECK(r.image.height == 720);
  CHECK(r.scale == 1.0);

  r = resize_page(GrayImage(2560, 1440));
  CHECK(r.image.width == 1280);
  CHECK(r.image.height == 720);
  CHECK(r.scale == 0.5);

  r = resize_page(GrayImage(1000, 3000));
  CHECK(r.image.width == 240);
  CHECK(r.image.height == 720);
  CHECK(r.scale == doctest::Approx(0.24));
}

TEST_CASE("to_iam_style stretches, crops and thickens") {
  GrayImage img(20, 10, 200);
  for (int x = 5; x < 12; ++x) img.at(x, 4) = 100;
  const auto out = to_iam_style(img);
  // Ink row plus 2 px margin each side, then a 3x3 min filter.
  CHECK(out.width == 7 + 4);
  CHECK(out.height == 1 + 4);
  CHECK(*std::min_element(out.data.begin(), out.data.end()) == 0);
  CHECK(*std::max_element(out.data.begin(), out.data.end()) == 255);
  const auto stretched = contrast_stretch(img);
  CHECK(stretched.at(5, 4) == 0);
  CHECK(stretched.at(0, 0) == 255);

  CHECK_THROWS_AS(to_iam_style(GrayImage(8, 8, 255)), Error);
  try {
    to_iam_style(GrayImage(8, 8, 255));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoInk);
  }
}

TEST_CASE("thickening never removes ink") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = random_image(17, 9, rng);
    CHECK(count_below(thicken(img), 128) >= count_below(img, 128));
  }
}

TEST_CASE("to_iam_style is stable on its own output") {
  const auto img = strokes::word_strokes(4, 0.0, 11);
  const auto once = to_iam_style(img);
  const auto twice = to_iam_style(once);
  // The stretch is the identity on a full-range image; the crop may only
  // trim, and another min filter pass grows the ink by at most one ring.
  CHECK(twice.width <= once.width + 2);
  CHECK(twice.height <= once.height + 2);
  CHECK(count_below(twice, 128) >= count_below(once, 128));
}

TEST_CASE("deslant leaves an upright bar alone") {
  GrayImage img(30, 40);
  for (int y = 5; y < 35; ++y)
    for (int x = 13; x < 17; ++x) img.at(x, y) = 0;
  const auto d = deslant(img);
  CHECK(d.shear == 0.0);
  CHECK(d.slope_degrees == 0.0);
  CHECK(d.image == img);
}

TEST_CASE("deslant undoes a +0.5 shear of a bar") {
  GrayImage img(30, 40);
  for (int y = 5; y < 35; ++y)
    for (int x = 13; x < 17; ++x) img.at(x, y) = 0;
  const auto d = deslant(shear_image(img, 0.5));
  CHECK(std::abs(d.shear - (-0.5)) <= kShearStep + 1e-9);
}

TEST_CASE("deslant of a blank image is a no-op") {
  const GrayImage blank(20, 10);
  const auto d = deslant(blank);
  CHECK(d.shear == 0.0);
  CHECK(d.image == blank);
}

TEST_CASE("deslant is approximately idempotent") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto img = shear_image(strokes::word_strokes(3, 0.0, seed), shear_candidate(static_cast<int>(seed % 11)));
    const auto first = deslant(img);
    const auto second = deslant(first.image);
    CHECK(std::abs(second.shear) <= kShearStep + 1e-9);
  }
}

TEST_CASE("shear grid") {
  CHECK(shear_candidate(0) == doctest::Approx(-1.0));
  CHECK(shear_candidate(5) == doctest::Approx(0.0));
  CHECK(shear_candidate(10) == doctest::Approx(1.0));
}

TEST_CASE("fit_to_canvas") {
  auto out = fit_to_canvas(GrayImage(256, 64, 0));
  CHECK(out.width == 128);
  CHECK(out.height == 32);
  CHECK(std::all_of(out.data.begin(), out.data.end(), [](auto v) { return v == 0; }));

  out = fit_to_canvas(GrayImage(64, 64, 0));
  for (int y = 0; y < 32; ++y) {
    CHECK(out.at(31, y) == 0);
    CHECK(out.at(32, y) == 255);
  }

  out = fit_to_canvas(GrayImage(100, 10, 0));
  CHECK(out.at(127, 11) == 0);
  CHECK(out.at(127, 12) == 255);
}

TEST_CASE("fit_to_canvas output always matches the spec") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> dim(1, 300);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const auto out = fit_to_canvas(GrayImage(w, h, 0));
    REQUIRE(out.width == 128);
    REQUIRE(out.height == 32);
    // Pasted extent of the black image.
    int pw = 0, ph = 0;
    while (pw < 128 && out.at(pw, 0) == 0) ++pw;
    while (ph < 32 && out.at(0, ph) == 0) ++ph;
    const double s = std::min(128.0 / w, 32.0 / h);
    CHECK(std::abs(pw - w * s) <= 1.0);
    CHECK(std::abs(ph - h * s) <= 1.0);
  }
}

TEST_CASE("normalize") {
  auto t = normalize(GrayImage(5, 3, 77));
  CHECK(std::all_of(t.data.begin(), t.data.end(), [](float v) { return v == 0.0f; }));

  GrayImage two(2, 1);
  two.at(0, 0) = 0;
  two.at(1, 0) = 255;
  t = normalize(two);
  CHECK(t.at(0, 0) == doctest::Approx(-1.0));
  CHECK(t.at(1, 0) == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  const auto img = random_image(128, 32, rng);
  t = normalize(img);
  REQUIRE(t.dims == std::vector<std::size_t>{128, 32});
  double mean = 0, sq = 0;
  for (float v : t.data) mean += v;
  mean /= t.size();
  for (float v : t.data) sq += (v - mean) * (v - mean);
  CHECK(std::abs(mean) < 1e-5);
  CHECK(std::abs(std::sqrt(sq / t.size()) - 1.0) < 1e-5);
  // Columns are contiguous.
  CHECK(t.at(3, 7) == doctest::Approx(normalize(img).data[3 * 32 + 7]));
}

TEST_CASE("augment") {
  const auto img = strokes::word_strokes(3, 0.0, 5);
  AugmentConfig identity{{1.0, 1.0}, 0, 0.0, 42};
  CHECK(augment(img, identity) == fit_to_canvas(img));

  AugmentConfig cfg;
  cfg.seed = 17;
  CHECK(augment(img, cfg) == augment(img, cfg));
  cfg.seed = 18;
  CHECK_FALSE(augment(img, cfg) == augment(img, AugmentConfig{{0.75, 1.25}, 3, 10.0, 17}));

  AugmentConfig noisy{{1.0, 1.0}, 0, 25.0, 3};
  const CanvasSpec grey{100, 100, 128};
  const auto out = augment(GrayImage(100, 100, 128), noisy, grey);
  double sq = 0;
  for (auto v : out.data) sq += (v - 128.0) * (v - 128.0);
  const double sd = std::sqrt(sq / out.data.size());
  CHECK(sd == doctest::Approx(25.0).epsilon(0.1));

  const auto n = normalize(augment(img, identity));
  double mean = 0;
  for (float v : n.data) mean += v;
  CHECK(std::abs(mean / n.size()) < 1e-5);
}

TEST_CASE("damaged_placeholder is black") {
  auto p = damaged_placeholder();
  CHECK(p.width == 128);
  CHECK(p.height == 32);
  CHECK(std::accumulate(p.data.begin(), p.data.end(), 0L) == 0);
  p = damaged_placeholder({1, 1, 255});
  CHECK(p.data == std::vector<std::uint8_t>{0});
}

TEST_CASE("otsu separates two levels") {
  GrayImage img(10, 10, 220);
  for (int i = 0; i < 30; ++i) img.data[i] = 40;
  const int t = otsu_threshold(img);
  CHECK(t > 40);
  CHECK(t <= 220);
  CHECK(count_below(img, t) == 30);
}

TEST_CASE("baseline slope of a tilted line") {
  GrayImage img(200, 60);
  const double slope = std::tan(5.0 * 3.14159265358979 / 180.0);
  for (int x = 10; x < 190; ++x) {
    const int y = static_cast<int>(std::lround(20 + slope * x));
    img.at(x, y) = 0;
  }
  CHECK(baseline_slope_degrees(img, 128) == doctest::Approx(5.0).epsilon(0.05));
}
