#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hwanno/charset.hpp"
#include "hwanno/cnn.hpp"
#include "hwanno/image.hpp"
#include "hwanno/mdlstm.hpp"
#include "hwanno/model.hpp"

namespace hwanno {

template <typename T>
struct ModelCache {
  CnnCache<T> cnn;
  MdLstmCache<T> lstm;
};

// Image tensor -> (grid_width, num_classes) logits.
template <typename T>
BasicTensor<T> model_forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                             const ForwardOptions& opts = {}, ModelCache<T>* cache = nullptr);

// CTC loss of one item. Parameter gradients are added to grads; the input
// gradient is written when input_grad is non-null.
template <typename T>
T model_loss_and_grad(const BasicTensor<T>& input, std::span<const int> label,
                      const ModelParams<T>& params, const ForwardOptions& opts,
                      ModelParams<T>& grads, BasicTensor<T>* input_grad = nullptr);

struct TrainConfig {
  double learning_rate = 0.01;
  double lr_decay = 0.99;  // lr = learning_rate * lr_decay^epoch
  int batch_size = 50;
  double noise_sigma = 0.1;
  int max_label_len = 32;
  std::uint64_t seed = 0;
  double rms_decay = 0.9;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip, 0 disables

  void validate() const;
};

struct OptimizerState {
  ModelParams<float> mean_square;
  int epoch = 0;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ModelParams<float>& params);
};

struct TrainItem {
  Tensor image;  // normalised (input_width, input_height)
  std::vector<int> label;
};

struct StepReport {
  double mean_loss = 0;  // over the items actually used
  std::size_t used = 0;
  std::vector<std::size_t> skipped;  // batch positions with infeasible labels
};

double learning_rate_at(const TrainConfig& cfg, int epoch);

// One RMSProp update on the batch-mean gradient. Deterministic given
// cfg.seed and state.step.
StepReport train_step(std::span<const TrainItem> batch, ModelParams<float>& params,
                      const TrainConfig& cfg, OptimizerState& state);

// Dataset-level training with a seeded train/validation split.

struct Sample {
  std::string name;
  GrayImage image;
  std::string text;
};

struct EpochLog {
  int epoch = 0;  // counted from 1
  double learning_rate = 0;
  double train_loss = 0;
  double train_cer = 0;
  double val_cer = 0;  // NaN without a validation split
};

struct TrainRunConfig {
  ModelConfig model;
  TrainConfig train;
  int epochs = 300;
  double val_fraction = 0.05;
  bool augment = false;
  // Prepare training images exactly as recognition does (IAM-style check and
  // deslanting) instead of only fitting them to the canvas.
  bool match_inference = false;
};

struct TrainOutcome {
  ModelParams<float> best;  // lowest validation CER, then lowest training CER
  ModelParams<float> last;
  int best_epoch = 0;  // log[best_epoch - 1]
  std::vector<EpochLog> log;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
  std::vector<std::string> skipped;  // names of samples with unusable labels
};

TrainOutcome train_model(const std::vector<Sample>& samples, const CharSet& charset,
                         const TrainRunConfig& run,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace hwanno
