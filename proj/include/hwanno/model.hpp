#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hwanno/archive.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno {

struct ConvBlock {
  int kernel = 3;
  int channels = 64;
  bool pool = false;  // 2x2 max-pool after the ReLU
  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

// Architecture of the recogniser. The conv stack turns an input_width x
// input_height image into a grid; each grid column (height x channels
// features) passes through fc_layers fully connected layers of width fc_dim;
// the result is viewed as a (grid_width, grid_height, fc_dim / grid_height)
// grid for the 2-D LSTM, whose height-summed output is projected onto
// num_classes logits per column.
struct ModelConfig {
  int input_width = 128;
  int input_height = 32;
  std::vector<ConvBlock> conv = {{7, 16, true}, {5, 32, true}, {5, 64, false}, {3, 64, false},
                                 {3, 64, false}, {3, 64, false}, {3, 64, false}, {3, 64, false}};
  int fc_dim = 512;
  int fc_layers = 2;
  int hidden = 256;
  int num_classes = 80;

  // 128x32 -> 32x512 -> 32x80 with 256 LSTM cells.
  static ModelConfig standard();
  // Same topology with narrower layers, sized for training on a laptop CPU.
  static ModelConfig compact(int num_classes = 80);

  int grid_width() const;
  int grid_height() const;
  int conv_out_channels() const { return conv.back().channels; }
  int lstm_input() const { return fc_dim / grid_height(); }

  void validate() const;  // throws ShapeMismatch
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr int kDirections = 4;
inline constexpr int kGates = 5;  // input, forget-left, forget-up, output, candidate

template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<BasicTensor<T>> tensors;

  // Zero-filled parameters with every shape set from config.
  static ModelParams zeros(const ModelConfig& config);

  std::size_t conv_weight(std::size_t block) const { return 2 * block; }
  std::size_t conv_bias(std::size_t block) const { return 2 * block + 1; }
  std::size_t fc_weight(std::size_t layer) const { return 2 * (config.conv.size() + layer); }
  std::size_t fc_bias(std::size_t layer) const { return fc_weight(layer) + 1; }
  std::size_t lstm_base(int dir) const {
    return 2 * (config.conv.size() + config.fc_layers) + 4 * static_cast<std::size_t>(dir);
  }
  std::size_t lstm_w_in(int dir) const { return lstm_base(dir); }
  std::size_t lstm_w_left(int dir) const { return lstm_base(dir) + 1; }
  std::size_t lstm_w_up(int dir) const { return lstm_base(dir) + 2; }
  std::size_t lstm_bias(int dir) const { return lstm_base(dir) + 3; }
  std::size_t proj_weight() const { return lstm_base(kDirections); }
  std::size_t proj_bias() const { return proj_weight() + 1; }

  BasicTensor<T>& operator[](std::size_t i) { return tensors[i]; }
  const BasicTensor<T>& operator[](std::size_t i) const { return tensors[i]; }

  std::size_t parameter_count() const;
  bool all_finite() const;
  void fill(T v);

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.config = config;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<U>());
    return out;
  }
};

// Glorot-uniform weights, zero biases, forget-gate biases at 1.
ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed);

// SGM1 archive: a "manifest" entry holding the UTF-8 bytes of a JSON document
// with the architecture and the ordered layer names, then one entry per layer.
TensorArchive params_to_archive(const ModelParams<float>& params);
ModelParams<float> params_from_archive(const TensorArchive& archive);
void save_params(const ModelParams<float>& params, const std::filesystem::path& path);
ModelParams<float> load_params(const std::filesystem::path& path);

}  // namespace hwanno
