#pragma once

#include <array>
#include <vector>

#include "hwanno/model.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno {

template <typename T>
struct MdLstmCache {
  struct Direction {
    AlignedVector<T> gates;   // activated gates, 5*hidden per cell
    AlignedVector<T> cell;    // hidden per cell
    AlignedVector<T> output;  // hidden per cell
  };
  std::array<Direction, kDirections> dirs;
  AlignedVector<T> input;   // lstm_input per cell
  AlignedVector<T> summed;  // hidden per time step, summed over height and directions
};

// Four-direction 2-D LSTM over the (grid_width, grid_height, lstm_input) view
// of the CNN features, summed over directions and height, then projected to
// raw logits of shape (grid_width, num_classes). Throws ShapeMismatch.
template <typename T>
BasicTensor<T> mdlstm_forward(const BasicTensor<T>& features, const ModelParams<T>& params,
                              MdLstmCache<T>* cache = nullptr);

// Accumulates parameter gradients and returns d(loss)/d(features).
template <typename T>
BasicTensor<T> mdlstm_backward(const BasicTensor<T>& grad_logits, const ModelParams<T>& params,
                               const MdLstmCache<T>& cache, ModelParams<T>& grads);

}  // namespace hwanno
