#include <random>

#include "doctest.h"
#include "generators.hpp"
#include "hwanno/error.hpp"
#include "hwanno/order.hpp"

using namespace hwanno;
using namespace hwanno::order;

namespace {

BoxRecord rec(std::uint64_t id, double x, double y, double w, double h) {
  BoxRecord b;
  b.id = {id};
  b.rect = {x, y, w, h};
  return b;
}

std::vector<BoxId> ids(std::initializer_list<std::uint64_t> v) {
  std::vector<BoxId> out;
  for (auto x : v) out.push_back({x});
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("serialize_boxes examples") {
  const auto a = rec(1, 10, 10, 30, 10), b = rec(2, 50, 10, 30, 10), c = rec(3, 10, 40, 30, 10);
  CHECK(serialize_boxes({c, b, a}).sequence() == ids({1, 2, 3}));
  CHECK(serialize_boxes({a}).sequence() == ids({1}));
  // 60% vertical overlap joins A's line.
  const auto b2 = rec(2, 50, 14, 30, 10);
  CHECK(serialize_boxes({b2, c, a}).sequence() == ids({1, 2, 3}));
  const auto lines = cluster_lines({a, b2, c});
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == ids({1, 2}));
  // 40% overlap stays separate, and its top is lower so it is read second.
  const auto b3 = rec(2, 0, 16, 30, 10);
  CHECK(cluster_lines({a, b3}).size() == 2);
  CHECK(serialize_boxes({b3, a}).sequence() == ids({1, 2}));
}

TEST_CASE("serialize_boxes: row-major on jittered synthetic pages") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 200; ++t) {
    const auto page = gen::lines_page(rng);
    CHECK(serialize_boxes(page.boxes).sequence() == page.expected);
  }
}

TEST_CASE("serialize_boxes: permutation, input-order and translation invariance") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> pos(0, 500), size(1, 60), shift(-300, 300);
  for (int t = 0; t < 200; ++t) {
    std::vector<BoxRecord> boxes;
    const int n = static_cast<int>(rng() % 20);
    // Quarter-pixel coordinates keep sums exact under translation.
    auto q = [&](std::uniform_real_distribution<double>& d) { return std::round(d(rng) * 4) / 4; };
    for (int i = 0; i < n; ++i)
      boxes.push_back(rec(static_cast<std::uint64_t>(i + 1), q(pos), q(pos), std::max(0.25, q(size)), std::max(0.25, q(size))));
    const auto seq = serialize_boxes(boxes).sequence();
    auto sorted = seq;
    std::sort(sorted.begin(), sorted.end());
    std::vector<BoxId> all;
    for (const auto& b : boxes) all.push_back(b.id);
    CHECK(sorted == all);

    auto shuffled = boxes;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(serialize_boxes(shuffled).sequence() == seq);

    const double dx = std::round(shift(rng)), dy = std::round(shift(rng));
    auto moved = boxes;
    for (auto& b : moved) {
      b.rect.x += dx;
      b.rect.y += dy;
    }
    CHECK(serialize_boxes(moved).sequence() == seq);
  }
}

TEST_CASE("swap") {
  const OrderedLayout l(ids({1, 2, 3}));
  const auto s = swap(l, {1}, {3});
  CHECK(s.sequence() == ids({3, 2, 1}));
  CHECK(swap(l, {2}, {2}) == l);
  CHECK(s.neighbors({2}).prev == BoxId{3});
  CHECK(s.neighbors({2}).next == BoxId{1});
  CHECK_FALSE(s.neighbors({3}).prev.has_value());
  CHECK(code_of([&] { swap(l, {1}, {9}); }) == ErrorCode::UnknownId);
}

TEST_CASE("swap is an involution") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng() % 15;
    std::vector<BoxId> seq;
    for (std::size_t i = 0; i < n; ++i) seq.push_back({i + 1});
    std::shuffle(seq.begin(), seq.end(), rng);
    const OrderedLayout l(seq);
    const BoxId a{1 + rng() % n}, b{1 + rng() % n};
    CHECK(swap(swap(l, a, b), a, b) == l);
  }
}

TEST_CASE("neighbours follow the sequence") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<BoxId> seq;
    for (std::size_t i = 0; i < n; ++i) seq.push_back({i + 10});
    std::shuffle(seq.begin(), seq.end(), rng);
    const OrderedLayout l(seq);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nb = l.neighbors(seq[i]);
      CHECK(nb.prev == (i > 0 ? std::optional(seq[i - 1]) : std::nullopt));
      CHECK(nb.next == (i + 1 < n ? std::optional(seq[i + 1]) : std::nullopt));
    }
  }
}

TEST_CASE("page editing") {
  Page page(200, 100);
  CHECK(rect_from_drag(10, 10, 50, 30) == Rect{10, 10, 40, 20});
  CHECK(rect_from_drag(50, 30, 10, 10) == Rect{10, 10, 40, 20});

  const auto& a = page.add_box(rect_from_drag(10, 10, 50, 30));
  CHECK(a.rect == Rect{10, 10, 40, 20});
  CHECK(page.layout_stale());
  const auto& clipped = page.add_box({180, 90, 50, 50});
  CHECK(clipped.rect == Rect{180, 90, 20, 10});
  CHECK(code_of([&] { page.add_box({5, 5, 0, 10}); }) == ErrorCode::ZeroArea);
  CHECK(code_of([&] { page.add_box({300, 5, 10, 10}); }) == ErrorCode::ZeroArea);

  page.add_box({60, 10, 20, 20});
  CHECK(page.layout().sequence() == ids({1, 2, 3}));
  page.delete_box({2});
  CHECK(page.layout().sequence() == ids({1, 3}));
  CHECK(page.layout().neighbors({1}).next == BoxId{3});
  CHECK(code_of([&] { page.delete_box({2}); }) == ErrorCode::UnknownId);

  page.set_text({1}, "word", true);
  const auto moved = page.update_box({1}, {11, 10, 40, 20});
  CHECK(moved.rect.x == 11);
  CHECK_FALSE(moved.text.has_value());
  CHECK_FALSE(moved.text_edited);
  CHECK(page.layout().sequence() == ids({1, 3}));

  // Moving box 1 to the right of box 3 changes the serialized order.
  page.update_box({1}, {120, 10, 40, 20});
  CHECK(page.serialize().sequence() == ids({3, 1}));
  CHECK_FALSE(page.layout_stale());

  Page single(10, 10);
  single.add_box({1, 1, 2, 2});
  single.delete_box({1});
  CHECK(single.layout().empty());
}

TEST_CASE("page restore validates the layout") {
  std::vector<BoxRecord> boxes{rec(1, 0, 0, 5, 5), rec(2, 5, 5, 5, 5)};
  CHECK_NOTHROW(Page::restore(20, 20, boxes, ids({2, 1})));
  CHECK(code_of([&] { Page::restore(20, 20, boxes, ids({1, 3})); }) == ErrorCode::ValidationError);
  CHECK(code_of([&] { Page::restore(20, 20, boxes, ids({1})); }) == ErrorCode::ValidationError);
  CHECK(code_of([&] { Page::restore(20, 20, boxes, ids({1, 1, 2})); }) == ErrorCode::ValidationError);
  boxes.push_back(rec(2, 1, 1, 1, 1));
  CHECK(code_of([&] { Page::restore(20, 20, boxes, ids({1, 2})); }) == ErrorCode::ValidationError);
}
