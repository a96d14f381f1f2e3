#include "hwanno/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "hwanno/error.hpp"

namespace hwanno {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h),
      data(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill) {
  if (w < 1 || h < 1)
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be >= 1");
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

namespace {

// Scales 16-bit samples down to 8 bits.
std::uint8_t sample8(const cv::Mat& m, int row, int col, int ch) {
  const int channels = m.channels();
  if (m.depth() == CV_8U) return m.ptr<std::uint8_t>(row)[col * channels + ch];
  if (m.depth() == CV_16U) {
    const auto v = m.ptr<std::uint16_t>(row)[col * channels + ch];
    return static_cast<std::uint8_t>((v + 128) / 257);
  }
  throw Error(ErrorCode::BadImage, "unsupported sample depth");
}

}  // namespace

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw Error(ErrorCode::BadImage, "empty image data");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U,
              const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat m;
  try {
    m = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw Error(ErrorCode::BadImage, e.what());
  }
  if (m.empty()) throw Error(ErrorCode::BadImage, "not a decodable PNG/JPEG");

  GrayImage out(m.cols, m.rows);
  const int channels = m.channels();
  for (int y = 0; y < m.rows; ++y) {
    for (int x = 0; x < m.cols; ++x) {
      if (channels == 1 || channels == 2) {
        out.at(x, y) = sample8(m, y, x, 0);
      } else {
        // OpenCV orders colour channels BGR(A).
        out.at(x, y) =
            luma(sample8(m, y, x, 2), sample8(m, y, x, 1), sample8(m, y, x, 0));
      }
    }
  }
  return out;
}

GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  cv::Mat m(img.height, img.width, CV_8U,
            const_cast<std::uint8_t*>(img.data.data()));
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", m, out))
    throw Error(ErrorCode::IoFailure, "PNG encoding failed");
  return out;
}

void write_png(const GrayImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

GrayImage crop(const GrayImage& img, int x, int y, int w, int h) {
  const int x0 = std::max(x, 0);
  const int y0 = std::max(y, 0);
  const int x1 = std::min(x + w, img.width);
  const int y1 = std::min(y + h, img.height);
  if (x1 <= x0 || y1 <= y0)
    throw Error(ErrorCode::ZeroArea, "crop outside image");
  GrayImage out(x1 - x0, y1 - y0);
  for (int yy = y0; yy < y1; ++yy)
    std::copy_n(&img.data[static_cast<std::size_t>(yy) * img.width + x0],
                x1 - x0, &out.at(0, yy - y0));
  return out;
}

}  // namespace hwanno
