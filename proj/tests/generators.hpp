#pragma once

// Hand-rolled random generators for property tests.

#include <random>
#include <string>
#include <vector>

#include "hwanno/detect.hpp"
#include "hwanno/order.hpp"
#include "hwanno/project.hpp"

namespace gen {

inline std::vector<hwanno::detect::RotatedBox> boxes(std::mt19937_64& rng, int max_count) {
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_real_distribution<double> pos(0, 200), size(2, 60), angle(-0.4, 0.4);
  // Coarse scores make ties common so the tie-break order is exercised.
  std::uniform_int_distribution<int> score(1, 10);
  std::bernoulli_distribution rotated(0.3), snap(0.3);
  std::vector<hwanno::detect::RotatedBox> out(static_cast<std::size_t>(count(rng)));
  for (auto& b : out) {
    b.center = {pos(rng), pos(rng)};
    if (snap(rng)) b.center = {std::round(b.center.x / 20) * 20, std::round(b.center.y / 20) * 20};
    b.width = size(rng);
    b.height = size(rng);
    b.angle = rotated(rng) ? angle(rng) : 0.0;
    b.score = score(rng) / 10.0;
  }
  return out;
}

struct SyntheticPage {
  std::vector<hwanno::order::BoxRecord> boxes;  // shuffled
  std::vector<hwanno::order::BoxId> expected;   // row-major
  double width = 0, height = 0;
};

// k lines of m words; each word's top is jittered by less than 40% of the
// line height.
inline SyntheticPage lines_page(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> lines(1, 8), words(1, 10);
  std::uniform_real_distribution<double> line_h(8, 60), unit(0, 1);
  const int k = lines(rng);
  const double h = line_h(rng);
  const double pitch = h * (2.0 + unit(rng));
  SyntheticPage page;
  std::uint64_t next = 1;
  double max_x = 0;
  for (int line = 0; line < k; ++line) {
    const int m = words(rng);
    double x = 5 + 20 * unit(rng);
    for (int w = 0; w < m; ++w) {
      const double width = h * (0.5 + 3 * unit(rng));
      const double jitter = 0.4 * h * unit(rng);  // in [0, 0.4h)
      hwanno::order::BoxRecord b;
      b.id = {next++};
      b.rect = {x, 10 + line * pitch + jitter, width, h};
      page.boxes.push_back(b);
      page.expected.push_back(b.id);
      x += width + h * (0.2 + unit(rng));
      max_x = std::max(max_x, x);
    }
  }
  page.width = max_x + 10;
  page.height = 10 + k * pitch + h;
  std::shuffle(page.boxes.begin(), page.boxes.end(), rng);
  return page;
}

inline std::string word(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "the", "é", "x\"y", "ü", "line", "\\", "k", "Ø", " ", "q"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(1, 4);
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s += pieces[pick(rng)];
  return s;
}

// Random valid project built through the public editing API.
inline hwanno::project::Project project(std::mt19937_64& rng) {
  using namespace hwanno;
  std::uniform_real_distribution<double> unit(0, 1);
  std::uniform_int_distribution<int> dim(50, 3000), count(0, 25);
  project::PageInfo info{"pages/p" + std::to_string(rng() % 1000) + ".png", dim(rng), dim(rng),
                         std::round((unit(rng) + 0.1) * 1e6) / 1e6};
  auto p = project::Project::create(info);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double x = unit(rng) * info.width * 0.9, y = unit(rng) * info.height * 0.9;
    // Six-decimal coordinates survive the canonical float format exactly.
    auto q = [](double v) { return std::round(v * 1e6) / 1e6; };
    std::optional<double> score;
    if (unit(rng) < 0.5) score = q(unit(rng));
    const double angle = unit(rng) < 0.3 ? q(unit(rng) - 0.5) : 0.0;
    p.layout.add_box({q(x), q(y), q(1 + unit(rng) * (info.width * 0.1 - 1)), q(1 + unit(rng) * (info.height * 0.1 - 1))},
                     score, angle);
  }
  if (unit(rng) < 0.7) p.layout.serialize();
  for (const auto& b : std::vector(p.layout.boxes())) {
    const double r = unit(rng);
    if (r < 0.4)
      p.layout.set_text(b.id, word(rng), false);
    else if (r < 0.6)
      p.layout.set_text(b.id, word(rng), true);
  }
  if (p.layout.boxes().size() >= 2 && unit(rng) < 0.5) {
    const auto& s = p.layout.layout().sequence();
    p.layout.swap(s.front(), s.back());
  }
  p.status = static_cast<project::Status>(rng() % 5);
  return p;
}

}  // namespace gen
