#pragma once

#include <string>

#include "hwanno/charset.hpp"
#include "hwanno/image.hpp"
#include "hwanno/model.hpp"

namespace hwanno {

enum class DecodeMode { Greedy, Beam };

struct RecognizeOptions {
  DecodeMode mode = DecodeMode::Beam;
  int beam_width = 25;
};

struct Recognition {
  std::string text;
  double log_prob = 0;  // log p(text | image) under the model
  bool no_ink = false;
};

// Canvas-sized word image as the recogniser sees it. Crops that do not look
// like IAM scans are converted first, then every crop is deslanted. Sets
// *no_ink and returns a blank canvas when the crop carries no ink.
GrayImage prepare_word_image(const GrayImage& crop, const ModelConfig& config, bool* no_ink = nullptr);

// Training-side preparation: a plain canvas fit, or the full recognition
// path when match_inference is set.
GrayImage prepare_training_image(const GrayImage& image, const ModelConfig& config, bool match_inference);

Recognition recognize_word(const GrayImage& crop, const ModelParams<float>& params,
                           const CharSet& charset, const RecognizeOptions& opts = {});

}  // namespace hwanno
