#include "hwanno/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hwanno/ctc.hpp"
#include "hwanno/error.hpp"
#include "hwanno/lexicon.hpp"
#include "hwanno/preproc.hpp"
#include "hwanno/recognize.hpp"

namespace hwanno {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(a) ^ b) ^ c);
}

}  // namespace

template <typename T>
BasicTensor<T> model_forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                             const ForwardOptions& opts, ModelCache<T>* cache) {
  const BasicTensor<T> features = cnn_forward(input, params, opts, cache ? &cache->cnn : nullptr);
  return mdlstm_forward(features, params, cache ? &cache->lstm : nullptr);
}

template <typename T>
T model_loss_and_grad(const BasicTensor<T>& input, std::span<const int> label,
                      const ModelParams<T>& params, const ForwardOptions& opts,
                      ModelParams<T>& grads, BasicTensor<T>* input_grad) {
  ModelCache<T> cache;
  const BasicTensor<T> logits = model_forward(input, params, opts, &cache);
  const auto loss = ctc::ctc_loss(logits, label, params.config.num_classes - 1);
  const BasicTensor<T> dfeat = mdlstm_backward(loss.grad, params, cache.lstm, grads);
  BasicTensor<T> dinput = cnn_backward(dfeat, params, cache.cnn, grads);
  if (input_grad) *input_grad = std::move(dinput);
  return loss.loss;
}

template BasicTensor<float> model_forward(const BasicTensor<float>&, const ModelParams<float>&,
                                          const ForwardOptions&, ModelCache<float>*);
template BasicTensor<double> model_forward(const BasicTensor<double>&, const ModelParams<double>&,
                                           const ForwardOptions&, ModelCache<double>*);
template float model_loss_and_grad(const BasicTensor<float>&, std::span<const int>,
                                   const ModelParams<float>&, const ForwardOptions&,
                                   ModelParams<float>&, BasicTensor<float>*);
template double model_loss_and_grad(const BasicTensor<double>&, std::span<const int>,
                                    const ModelParams<double>&, const ForwardOptions&,
                                    ModelParams<double>&, BasicTensor<double>*);

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) bad("learning rate must be finite and >= 0");
  if (!(lr_decay > 0 && lr_decay <= 1)) bad("lr decay must be in (0, 1]");
  if (batch_size < 1) bad("batch size must be >= 1");
  if (!(noise_sigma >= 0)) bad("noise sigma must be >= 0");
  if (max_label_len < 1) bad("max label length must be >= 1");
  if (!(rms_decay >= 0 && rms_decay < 1)) bad("rms decay must be in [0, 1)");
  if (!(epsilon > 0)) bad("epsilon must be > 0");
  if (!(clip_norm >= 0)) bad("clip norm must be >= 0");
}

OptimizerState OptimizerState::for_params(const ModelParams<float>& params) {
  OptimizerState s;
  s.mean_square = ModelParams<float>::zeros(params.config);
  return s;
}

double learning_rate_at(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.lr_decay, epoch);
}

StepReport train_step(std::span<const TrainItem> batch, ModelParams<float>& params,
                      const TrainConfig& cfg, OptimizerState& state) {
  cfg.validate();
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  if (state.mean_square.tensors.size() != params.tensors.size())
    state.mean_square = ModelParams<float>::zeros(params.config);

  ModelParams<float> grads = ModelParams<float>::zeros(params.config);
  StepReport report;
  double loss_sum = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& item = batch[i];
    const std::size_t frames = static_cast<std::size_t>(params.config.grid_width());
    if (item.label.size() > static_cast<std::size_t>(cfg.max_label_len) ||
        ctc::required_frames(item.label) > frames) {
      report.skipped.push_back(i);
      continue;
    }
    ForwardOptions opts{true, cfg.noise_sigma, mix(cfg.seed, state.step, i)};
    loss_sum += model_loss_and_grad(item.image, std::span<const int>(item.label), params, opts, grads);
    ++report.used;
  }
  ++state.step;
  if (report.used == 0) return report;
  report.mean_loss = loss_sum / static_cast<double>(report.used);

  const float inv = 1.0f / static_cast<float>(report.used);
  double norm_sq = 0;
  for (auto& t : grads.tensors)
    for (float& g : t.data) {
      g *= inv;
      norm_sq += static_cast<double>(g) * g;
    }
  float clip = 1.0f;
  if (cfg.clip_norm > 0 && norm_sq > cfg.clip_norm * cfg.clip_norm)
    clip = static_cast<float>(cfg.clip_norm / std::sqrt(norm_sq));

  const float lr = static_cast<float>(learning_rate_at(cfg, state.epoch));
  const float decay = static_cast<float>(cfg.rms_decay);
  const float eps = static_cast<float>(cfg.epsilon);
  for (std::size_t k = 0; k < params.tensors.size(); ++k) {
    auto& p = params.tensors[k].data;
    auto& ms = state.mean_square.tensors[k].data;
    const auto& g = grads.tensors[k].data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const float gj = g[j] * clip;
      ms[j] = decay * ms[j] + (1.0f - decay) * gj * gj;
      p[j] -= lr * gj / (std::sqrt(ms[j]) + eps);
    }
  }
  return report;
}

namespace {

struct Prepared {
  std::size_t sample;
  std::vector<int> label;
  Tensor clean;  // normalised canvas without augmentation
};

double corpus_cer(const std::vector<lexicon::EvalPair>& pairs) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    return lexicon::cer(pairs);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double evaluate(const std::vector<Prepared>& items, const std::vector<Sample>& samples,
                const ModelParams<float>& params, const CharSet& charset) {
  std::vector<lexicon::EvalPair> pairs;
  for (const auto& it : items) {
    const Tensor logits = model_forward(it.clean, params);
    pairs.push_back({samples[it.sample].text, ctc::greedy_decode(logits, charset)});
  }
  return corpus_cer(pairs);
}

// NaN compares as worse than any number.
bool less_nan_last(double a, double b) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return a < b;
}

}  // namespace

TrainOutcome train_model(const std::vector<Sample>& samples, const CharSet& charset,
                         const TrainRunConfig& run,
                         const std::function<void(const EpochLog&)>& on_epoch) {
  run.model.validate();
  run.train.validate();
  if (run.epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (!(run.val_fraction >= 0 && run.val_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "validation fraction must be in [0, 1)");
  if (static_cast<int>(charset.num_classes()) != run.model.num_classes)
    throw Error(ErrorCode::ShapeMismatch,
                "charset has " + std::to_string(charset.num_classes()) + " classes, model expects " +
                    std::to_string(run.model.num_classes));

  TrainOutcome outcome;
  const std::size_t frames = static_cast<std::size_t>(run.model.grid_width());
  const preproc::CanvasSpec canvas{run.model.input_width, run.model.input_height, 255};

  std::vector<Prepared> usable;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::vector<int> label;
    try {
      label = charset.encode(samples[i].text);
    } catch (const Error&) {
      outcome.skipped.push_back(samples[i].name);
      continue;
    }
    if (label.size() > static_cast<std::size_t>(run.train.max_label_len) ||
        ctc::required_frames(label) > frames) {
      outcome.skipped.push_back(samples[i].name);
      continue;
    }
    const GrayImage img = prepare_training_image(samples[i].image, run.model, run.match_inference);
    usable.push_back({i, std::move(label), preproc::normalize(img)});
  }
  if (usable.empty()) throw Error(ErrorCode::EmptyCorpus, "no usable training samples");

  std::vector<std::size_t> order(usable.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix(run.train.seed, 0x5eed, 0));
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = 0;
  if (run.val_fraction > 0 && usable.size() >= 2)
    n_val = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(static_cast<double>(usable.size()) * run.val_fraction)), 1,
        usable.size() - 1);
  std::vector<Prepared> train_set, val_set;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? val_set : train_set).push_back(usable[order[i]]);
  }
  for (const auto& p : train_set) outcome.train_indices.push_back(p.sample);
  for (const auto& p : val_set) outcome.val_indices.push_back(p.sample);

  ModelParams<float> params = init_params(run.model, run.train.seed);
  OptimizerState state = OptimizerState::for_params(params);
  outcome.best = params;
  double best_val = std::numeric_limits<double>::quiet_NaN();
  double best_train = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::size_t> perm(train_set.size());
  std::iota(perm.begin(), perm.end(), 0);
  const auto batch = static_cast<std::size_t>(run.train.batch_size);
  for (int epoch = 0; epoch < run.epochs; ++epoch) {
    state.epoch = epoch;
    std::shuffle(perm.begin(), perm.end(), rng);
    double loss_sum = 0;
    std::size_t loss_items = 0;
    for (std::size_t start = 0; start < perm.size(); start += batch) {
      std::vector<TrainItem> items;
      for (std::size_t j = start; j < std::min(perm.size(), start + batch); ++j) {
        const Prepared& p = train_set[perm[j]];
        if (run.augment) {
          preproc::AugmentConfig aug;
          aug.seed = mix(run.train.seed, static_cast<std::uint64_t>(epoch) + 1, p.sample);
          const GrayImage src = prepare_training_image(samples[p.sample].image, run.model, run.match_inference);
          items.push_back({preproc::normalize(preproc::augment(src, aug, canvas)), p.label});
        } else {
          items.push_back({p.clean, p.label});
        }
      }
      const StepReport r = train_step(items, params, run.train, state);
      loss_sum += r.mean_loss * static_cast<double>(r.used);
      loss_items += r.used;
    }
    if (!params.all_finite())
      throw Error(ErrorCode::InvalidArgument, "training diverged at epoch " + std::to_string(epoch + 1));

    EpochLog log;
    log.epoch = epoch + 1;
    log.learning_rate = learning_rate_at(run.train, epoch);
    log.train_loss = loss_items ? loss_sum / static_cast<double>(loss_items) : 0.0;
    log.train_cer = evaluate(train_set, samples, params, charset);
    log.val_cer = evaluate(val_set, samples, params, charset);
    outcome.log.push_back(log);

    const bool better =
        epoch == 0 || less_nan_last(log.val_cer, best_val) ||
        (!less_nan_last(best_val, log.val_cer) && !less_nan_last(best_train, log.train_cer));
    if (better) {
      outcome.best = params;
      outcome.best_epoch = epoch + 1;
      best_val = log.val_cer;
      best_train = log.train_cer;
    }
    if (on_epoch) on_epoch(log);
  }
  outcome.last = std::move(params);
  return outcome;
}

}  // namespace hwanno
