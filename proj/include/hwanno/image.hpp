#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hwanno {

// 8-bit single-channel raster, row-major. 0 is black ink, 255 white paper.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255);

  std::uint8_t& at(int x, int y) {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool empty() const { return width <= 0 || height <= 0; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Rounded ITU-R BT.601 luma.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Decodes PNG or JPEG bytes; colour input is converted with luma(). Throws
// Error(BadImage) on undecodable input.
GrayImage decode_image(std::span<const std::uint8_t> bytes);
GrayImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const GrayImage& img);
void write_png(const GrayImage& img, const std::filesystem::path& path);

// Region of img intersected with the image bounds. Throws ZeroArea when the
// intersection is empty.
GrayImage crop(const GrayImage& img, int x, int y, int w, int h);

}  // namespace hwanno
