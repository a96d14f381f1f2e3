#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "hwanno/archive.hpp"
#include "hwanno/detect.hpp"
#include "hwanno/error.hpp"
#include "oracles.hpp"

using namespace hwanno;
using namespace hwanno::detect;

namespace {

ScoreGeoMaps empty_maps(std::size_t rows, std::size_t cols) {
  return {Tensor({rows, cols}), Tensor({5, rows, cols})};
}

void set_cell(ScoreGeoMaps& m, std::size_t i, std::size_t j, float score, std::array<float, 5> geo) {
  const std::size_t cols = m.cols(), plane = m.rows() * cols;
  m.score.data[i * cols + j] = score;
  for (std::size_t c = 0; c < 5; ++c) m.geometry.data[c * plane + i * cols + j] = geo[c];
}

RotatedBox axis_box(double x, double y, double w, double h, double score = 1) {
  return {{x + w / 2, y + h / 2}, w, h, 0, score};
}

}  // namespace

TEST_CASE("decode_geometry: axis-aligned cell") {
  auto m = empty_maps(6, 8);
  set_cell(m, 2, 3, 0.9f, {5, 7, 3, 4, 0});
  const auto boxes = decode_geometry(m, 0.5);
  REQUIRE(boxes.size() == 1);
  const auto e = boxes[0].envelope();
  CHECK(e.x == doctest::Approx(8));
  CHECK(e.x + e.w == doctest::Approx(19));
  CHECK(e.y == doctest::Approx(3));
  CHECK(e.y + e.h == doctest::Approx(11));
  CHECK(boxes[0].score == doctest::Approx(0.9));
}

TEST_CASE("decode_geometry: below threshold gives nothing") {
  auto m = empty_maps(4, 4);
  set_cell(m, 1, 1, 0.3f, {1, 1, 1, 1, 0});
  CHECK(decode_geometry(m, 0.5).empty());
}

TEST_CASE("decode_geometry: rotated cell matches a rotation matrix") {
  auto m = empty_maps(4, 4);
  const double theta = std::numbers::pi / 4;
  set_cell(m, 1, 2, 0.8f, {2, 2, 2, 2, static_cast<float>(theta)});
  const auto boxes = decode_geometry(m, 0.5);
  REQUIRE(boxes.size() == 1);
  // Anchor (8, 4); offsets (+-2, +-2) rotated by theta about it.
  const double c = std::cos(theta), s = std::sin(theta);
  const std::array<std::pair<double, double>, 4> offsets{{{-2, -2}, {2, -2}, {2, 2}, {-2, 2}}};
  const auto corners = boxes[0].corners();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto [dx, dy] = offsets[k];
    CHECK(corners[k].x == doctest::Approx(8 + c * dx - s * dy));
    CHECK(corners[k].y == doctest::Approx(4 + s * dx + c * dy));
  }
}

TEST_CASE("decode_geometry with theta 0 gives closed-form boxes for every cell") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<float> d(0.5f, 30.0f);
  auto m = empty_maps(9, 11);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 11; ++j) set_cell(m, i, j, 1.0f, {d(rng), d(rng), d(rng), d(rng), 0});
  const auto boxes = decode_geometry(m, 0.5);
  REQUIRE(boxes.size() == 99);
  const std::size_t plane = 99;
  for (std::size_t cell = 0; cell < plane; ++cell) {
    const double top = m.geometry.data[cell], right = m.geometry.data[plane + cell],
                 bottom = m.geometry.data[2 * plane + cell], left = m.geometry.data[3 * plane + cell];
    const double ax = 4.0 * (cell % 11), ay = 4.0 * (cell / 11);
    const auto e = boxes[cell].envelope();
    CHECK(e.x == doctest::Approx(ax - left));
    CHECK(e.y == doctest::Approx(ay - top));
    CHECK(e.w == doctest::Approx(left + right));
    CHECK(e.h == doctest::Approx(top + bottom));
  }
}

TEST_CASE("iou") {
  const auto a = axis_box(0, 0, 10, 10), b = axis_box(5, 5, 10, 10);
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, axis_box(20, 20, 5, 5)) == 0.0);
  CHECK(iou(a, b) == doctest::Approx(25.0 / 175.0));

  // Pixel-grid count of the same configuration.
  int inter = 0, uni = 0;
  for (int y = 0; y < 15; ++y)
    for (int x = 0; x < 15; ++x) {
      const bool in_a = x < 10 && y < 10, in_b = x >= 5 && y >= 5;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  CHECK(iou(a, b) == doctest::Approx(static_cast<double>(inter) / uni));
}

TEST_CASE("iou is symmetric") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto v = gen::boxes(rng, 2);
    if (v.size() < 2) continue;
    CHECK(iou(v[0], v[1]) == doctest::Approx(iou(v[1], v[0])));
    CHECK(iou(v[0], v[0]) == doctest::Approx(1.0));
  }
}

TEST_CASE("nms examples") {
  CHECK(nms({}, 0.4).empty());
  const auto one = axis_box(1, 2, 3, 4, 0.7);
  const auto kept = nms({one}, 0.4);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].center.x == one.center.x);

  // IoU(A, B) = 0.7 with equal heights: overlap 17/20 of width.
  const auto a = axis_box(0, 0, 20, 10, 0.9);
  const auto b = axis_box(20 - 20 * (2 * 0.7 / 1.7), 0, 20, 10, 0.8);
  REQUIRE(iou(a, b) == doctest::Approx(0.7));
  const auto out = nms({b, a}, 0.4);
  REQUIRE(out.size() == 1);
  CHECK(out[0].score == doctest::Approx(0.9));
}

TEST_CASE("nms properties on random sets") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 300; ++t) {
    const auto boxes = gen::boxes(rng, 30);
    const auto out = nms(boxes, 0.4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = i + 1; j < out.size(); ++j) {
        CHECK(iou(out[i], out[j]) < 0.4);
        CHECK(out[i].score >= out[j].score);
      }
    }
    const auto again = nms(out, 0.4);
    REQUIRE(again.size() == out.size());
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].center.x == out[i].center.x);
    const auto ref = oracle::nms(boxes, 0.4);
    REQUIRE(ref.size() == out.size());
  }
}

TEST_CASE("run_detection scales back to the original page") {
  auto m = empty_maps(180, 320);
  StubBackend zero(m);
  CHECK(run_detection(GrayImage(1280, 720), 0.5, zero, {}).empty());

  set_cell(m, 2, 3, 0.9f, {5, 7, 3, 4, 0});
  StubBackend one(m);
  const auto boxes = run_detection(GrayImage(1280, 720), 0.5, one, {});
  REQUIRE(boxes.size() == 1);
  const auto e = boxes[0].envelope();
  CHECK(e.x == doctest::Approx(16));
  CHECK(e.y == doctest::Approx(6));
  CHECK(e.w == doctest::Approx(22));
  CHECK(e.h == doctest::Approx(16));
}

TEST_CASE("archive backend round trip and failures") {
  auto m = empty_maps(3, 4);
  set_cell(m, 1, 1, 0.95f, {2, 3, 2, 3, 0});
  const auto bytes = maps_to_archive(m).serialize();
  ArchiveBackend backend(bytes);
  const auto back = backend.infer(GrayImage(16, 12));
  CHECK(back.score == m.score);
  CHECK(back.geometry == m.geometry);

  ArchiveBackend broken(std::vector<std::uint8_t>{'n', 'o', 'p', 'e'});
  try {
    broken.infer(GrayImage(4, 4));
    FAIL("expected BackendFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendFailure);
  }
  ArchiveBackend missing(std::filesystem::path("/nonexistent/maps.sgm"));
  CHECK_THROWS_AS(missing.infer(GrayImage(4, 4)), Error);
}

TEST_CASE("maps validation") {
  ScoreGeoMaps bad{Tensor({2, 2}), Tensor({5, 3, 2})};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(decode_geometry(bad, 0.5), Error);
  CHECK_THROWS_AS((DetectConfig{1.5, 0.4}.validate()), Error);
}
