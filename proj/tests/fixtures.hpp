#pragma once

// Seeded synthetic word images rendered with OpenCV's Hershey fonts.

#include <algorithm>
#include <opencv2/imgproc.hpp>
#include <random>
#include <string>
#include <vector>

#include "hwanno/image.hpp"

namespace fixtures {

struct Word {
  std::string text;
  hwanno::GrayImage image;
};

inline hwanno::GrayImage render(const std::string& text, int font = cv::FONT_HERSHEY_SIMPLEX,
                                double scale = 0.9, int thickness = 2) {
  int baseline = 0;
  const cv::Size size = cv::getTextSize(text, font, scale, thickness, &baseline);
  const int margin = 4;
  cv::Mat canvas(size.height + baseline + 2 * margin, size.width + 2 * margin, CV_8UC1, cv::Scalar(255));
  cv::putText(canvas, text, {margin, margin + size.height}, font, scale, cv::Scalar(0), thickness,
              cv::LINE_AA);
  hwanno::GrayImage img(canvas.cols, canvas.rows);
  for (int y = 0; y < canvas.rows; ++y)
    for (int x = 0; x < canvas.cols; ++x) img.at(x, y) = canvas.at<std::uint8_t>(y, x);
  return img;
}

// count distinct lowercase words of 3 to 6 letters.
inline std::vector<Word> words(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(3, 6), letter(0, 25);
  std::vector<Word> out;
  std::vector<std::string> seen;
  while (out.size() < count) {
    std::string w;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) w.push_back(static_cast<char>('a' + letter(rng)));
    if (std::find(seen.begin(), seen.end(), w) != seen.end()) continue;
    seen.push_back(w);
    out.push_back({w, render(w)});
  }
  return out;
}

}  // namespace fixtures
