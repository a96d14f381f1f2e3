#include "hwanno/recognize.hpp"

#include <algorithm>

#include "hwanno/ctc.hpp"
#include "hwanno/error.hpp"
#include "hwanno/preproc.hpp"
#include "hwanno/train.hpp"

namespace hwanno {

namespace {

preproc::CanvasSpec canvas_for(const ModelConfig& config) {
  return {config.input_width, config.input_height, 255};
}

bool uniform(const GrayImage& img) {
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  return *lo == *hi;
}

}  // namespace

GrayImage prepare_word_image(const GrayImage& crop, const ModelConfig& config, bool* no_ink) {
  if (no_ink) *no_ink = false;
  const auto spec = canvas_for(config);
  GrayImage img = crop;
  try {
    if (uniform(crop)) throw Error(ErrorCode::NoInk, "uniform crop");
    if (!preproc::looks_iam_like(crop)) img = preproc::to_iam_style(crop);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoInk) throw;
    if (no_ink) *no_ink = true;
    return GrayImage(spec.width, spec.height, spec.fill);
  }
  return preproc::fit_to_canvas(preproc::deslant(img).image, spec);
}

GrayImage prepare_training_image(const GrayImage& image, const ModelConfig& config, bool match_inference) {
  if (match_inference) return prepare_word_image(image, config);
  return preproc::fit_to_canvas(image, canvas_for(config));
}

Recognition recognize_word(const GrayImage& crop, const ModelParams<float>& params,
                           const CharSet& charset, const RecognizeOptions& opts) {
  if (static_cast<int>(charset.num_classes()) != params.config.num_classes)
    throw Error(ErrorCode::ShapeMismatch,
                "charset has " + std::to_string(charset.num_classes()) + " classes, model expects " +
                    std::to_string(params.config.num_classes));
  Recognition out;
  const GrayImage canvas = prepare_word_image(crop, params.config, &out.no_ink);
  if (out.no_ink) return out;

  const Tensor logits = model_forward(preproc::normalize(canvas), params);
  const int blank = charset.blank_index();
  const ctc::Decoded decoded = opts.mode == DecodeMode::Greedy
                                   ? ctc::greedy_decode(logits, blank)
                                   : ctc::beam_decode(logits, blank, opts.beam_width);
  out.text = charset.decode(decoded.labels);
  out.log_prob = ctc::ctc_log_prob(logits, std::span<const int>(decoded.labels), blank);
  return out;
}

}  // namespace hwanno
