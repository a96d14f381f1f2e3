#pragma once

#include <span>
#include <string>
#include <vector>

#include "hwanno/charset.hpp"
#include "hwanno/tensor.hpp"

namespace hwanno::ctc {

template <typename T>
struct LossResult {
  T loss;               // -ln p(label | softmax(logits))
  BasicTensor<T> grad;  // d loss / d logits, shape of the logits
};

// Frames needed to emit label: its length plus one blank between each pair
// of equal neighbours.
std::size_t required_frames(std::span<const int> label);

// logits are (T, K) raw scores. label holds class indices in [0, K) other
// than blank. Throws InfeasibleLabel when the label cannot fit in T frames
// and InvalidArgument on an out-of-range index. An empty label is valid.
template <typename T>
LossResult<T> ctc_loss(const BasicTensor<T>& logits, std::span<const int> label, int blank);

template <typename T>
T ctc_log_prob(const BasicTensor<T>& logits, std::span<const int> label, int blank);

// Row-wise log-softmax.
template <typename T>
BasicTensor<T> log_softmax(const BasicTensor<T>& logits);

struct Decoded {
  std::vector<int> labels;
  double log_prob = 0;  // log-probability the decoder assigns to labels
};

// Best path: per-frame argmax (lowest index wins ties), repeats collapsed,
// blanks removed. log_prob is that of the single best path.
Decoded greedy_decode(const Tensor& logits, int blank);

// Prefix beam search in log space. Every beam is extended by every class,
// identical prefixes are merged, and the beam_width most probable prefixes
// survive each frame. log_prob is the summed prefix probability.
Decoded beam_decode(const Tensor& logits, int blank, int beam_width);

std::string greedy_decode(const Tensor& logits, const CharSet& charset);
std::string beam_decode(const Tensor& logits, const CharSet& charset, int beam_width);

}  // namespace hwanno::ctc
