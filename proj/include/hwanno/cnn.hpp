#pragma once

#include <cstdint>
#include <vector>

#include "hwanno/model.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno {

struct ForwardOptions {
  bool training = false;
  double noise_sigma = 0.0;  // Gaussian noise after the conv stack, training only
  std::uint64_t noise_seed = 0;
};

// Intermediates kept by a training forward pass for the backward pass.
template <typename T>
struct CnnCache {
  struct Block {
    int width = 0, height = 0;  // spatial extent of the block input
    BasicTensor<T> patches;     // im2col matrix, (W*H) columns of k*k*Cin rows
    std::vector<unsigned char> active;  // ReLU mask on the conv output
    std::vector<std::uint32_t> argmax;  // pooled cell -> conv output index
  };
  std::vector<Block> blocks;
  std::vector<BasicTensor<T>> fc_inputs;
  std::vector<std::vector<unsigned char>> fc_active;
};

// Input is a (input_width, input_height) tensor as produced by
// preproc::normalize. Output is (grid_width, fc_dim): one feature vector per
// time step. Throws ShapeMismatch.
template <typename T>
BasicTensor<T> cnn_forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                           const ForwardOptions& opts = {}, CnnCache<T>* cache = nullptr);

// Accumulates parameter gradients into grads and returns d(loss)/d(input).
template <typename T>
BasicTensor<T> cnn_backward(const BasicTensor<T>& grad_output, const ModelParams<T>& params,
                            const CnnCache<T>& cache, ModelParams<T>& grads);

}  // namespace hwanno
