#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "hwanno/cnn.hpp"
#include "hwanno/ctc.hpp"
#include "hwanno/error.hpp"
#include "hwanno/mdlstm.hpp"
#include "hwanno/train.hpp"
#include "oracles.hpp"

using namespace hwanno;

using oracle::dot;
using oracle::random_tensor;

TEST_CASE("standard model maps 128x32 to 32x512 features and 32x80 logits") {
  const auto cfg = ModelConfig::standard();
  CHECK(cfg.grid_width() == 32);
  CHECK(cfg.grid_height() == 8);
  CHECK(cfg.lstm_input() == 64);
  const auto params = init_params(cfg, 1);
  Tensor input({128, 32});
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n;
  for (auto& v : input.data) v = n(rng);
  const Tensor features = cnn_forward(input, params);
  CHECK(features.dims == std::vector<std::size_t>{32, 512});
  const Tensor logits = mdlstm_forward(features, params);
  CHECK(logits.dims == std::vector<std::size_t>{32, 80});
  CHECK(params.all_finite());
}

TEST_CASE("input of the wrong size is a shape mismatch") {
  const auto params = init_params(ModelConfig::compact(), 1);
  Tensor input({100, 32});
  try {
    cnn_forward(input, params);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("zero parameters") {
  const auto cfg = oracle::toy_config();
  auto params = ModelParams<double>::zeros(cfg);
  const auto input = random_tensor({16, 8}, 4);
  const auto features = cnn_forward(input, params);
  for (double v : features.data) CHECK(v == 0.0);

  auto& pb = params[params.proj_bias()];
  pb.data = {0.5, -1.0, 2.0};
  const auto logits = mdlstm_forward(random_tensor(features.dims, 5), params);
  for (std::size_t t = 0; t < logits.dims[0]; ++t)
    for (std::size_t c = 0; c < 3; ++c) CHECK(logits.at(t, c) == pb.data[c]);
}

TEST_CASE("initialisation sets forget-gate biases to one") {
  const auto cfg = oracle::toy_config();
  const auto params = init_params(cfg, 7);
  const int h = cfg.hidden;
  for (int d = 0; d < kDirections; ++d) {
    const auto& b = params[params.lstm_bias(d)].data;
    for (int k = 0; k < kGates * h; ++k) CHECK(b[static_cast<std::size_t>(k)] == (k >= h && k < 3 * h ? 1.0f : 0.0f));
  }
  CHECK(init_params(cfg, 7).tensors[0].data == params.tensors[0].data);
  CHECK(init_params(cfg, 8).tensors[0].data != params.tensors[0].data);
}

TEST_CASE("cnn gradients match finite differences") {
  const auto cfg = oracle::toy_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto params = oracle::random_params<double>(cfg, seed, 0.5);
    auto input = random_tensor({16, 8}, 100 + seed);
    const auto probe = random_tensor({static_cast<std::size_t>(cfg.grid_width()), static_cast<std::size_t>(cfg.fc_dim)}, 200 + seed);
    auto loss = [&] { return dot(cnn_forward(input, params), probe); };

    CnnCache<double> cache;
    cnn_forward(input, params, {}, &cache);
    auto grads = ModelParams<double>::zeros(cfg);
    const auto dinput = cnn_backward(probe, params, cache, grads);

    CHECK(oracle::max_rel_error(dinput.data, oracle::numeric_grad(input.data, loss, 1e-5), 1e-6) < 1e-3);
    for (std::size_t k = 0; k < params.tensors.size() && k < params.fc_weight(cfg.fc_layers); ++k) {
      CAPTURE(params.names[k]);
      CHECK(oracle::max_rel_error(grads[k].data, oracle::numeric_grad(params[k].data, loss, 1e-5), 1e-6) < 1e-3);
    }
  }
}

TEST_CASE("cnn gradient through the noise layer") {
  const auto cfg = oracle::toy_config();
  auto params = oracle::random_params<double>(cfg, 3, 0.5);
  auto input = random_tensor({16, 8}, 4);
  const auto probe = random_tensor({8, 8}, 5);
  const ForwardOptions opts{true, 0.1, 42};
  auto loss = [&] { return dot(cnn_forward(input, params, opts), probe); };
  CnnCache<double> cache;
  cnn_forward(input, params, opts, &cache);
  auto grads = ModelParams<double>::zeros(cfg);
  const auto dinput = cnn_backward(probe, params, cache, grads);
  CHECK(oracle::max_rel_error(dinput.data, oracle::numeric_grad(input.data, loss, 1e-5), 1e-6) < 1e-3);
  CHECK(cnn_forward(input, params, opts).data == cnn_forward(input, params, opts).data);
  CHECK(cnn_forward(input, params, opts).data != cnn_forward(input, params).data);
}

TEST_CASE("mdlstm gradients match finite differences") {
  const auto cfg = oracle::toy_config();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto params = oracle::random_params<double>(cfg, seed, 0.5);
    auto features = random_tensor({static_cast<std::size_t>(cfg.grid_width()), static_cast<std::size_t>(cfg.fc_dim)}, 300 + seed);
    const auto probe = random_tensor({static_cast<std::size_t>(cfg.grid_width()), 3}, 400 + seed);
    auto loss = [&] { return dot(mdlstm_forward(features, params), probe); };

    MdLstmCache<double> cache;
    mdlstm_forward(features, params, &cache);
    auto grads = ModelParams<double>::zeros(cfg);
    const auto dfeat = mdlstm_backward(probe, params, cache, grads);

    CHECK(oracle::max_rel_error(dfeat.data, oracle::numeric_grad(features.data, loss, 1e-5), 1e-6) < 1e-3);
    for (std::size_t k = params.lstm_base(0); k < params.tensors.size(); ++k) {
      CAPTURE(params.names[k]);
      CHECK(oracle::max_rel_error(grads[k].data, oracle::numeric_grad(params[k].data, loss, 1e-5), 1e-6) < 1e-3);
    }
  }
}

TEST_CASE("mdlstm on a wider grid with several rows") {
  auto cfg = oracle::toy_config();
  cfg.input_width = 6;
  cfg.input_height = 12;
  cfg.fc_dim = 12;  // 3 columns of 6 rows with 2 features each
  auto params = oracle::random_params<double>(cfg, 9, 0.4);
  REQUIRE(cfg.grid_width() == 3);
  REQUIRE(cfg.grid_height() == 6);
  auto features = random_tensor({3, 12}, 10);
  const auto probe = random_tensor({3, 3}, 11);
  auto loss = [&] { return dot(mdlstm_forward(features, params), probe); };
  MdLstmCache<double> cache;
  mdlstm_forward(features, params, &cache);
  auto grads = ModelParams<double>::zeros(cfg);
  const auto dfeat = mdlstm_backward(probe, params, cache, grads);
  CHECK(oracle::max_rel_error(dfeat.data, oracle::numeric_grad(features.data, loss, 1e-5), 1e-6) < 1e-3);
  for (int d = 0; d < kDirections; ++d) {
    const std::size_t k = params.lstm_w_up(d);
    CHECK(oracle::max_rel_error(grads[k].data, oracle::numeric_grad(params[k].data, loss, 1e-5), 1e-6) < 1e-3);
  }
}

TEST_CASE("end-to-end input gradient on a three-class model") {
  const auto cfg = oracle::toy_config(3);
  const std::vector<int> label{0, 1};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto params = oracle::random_params<double>(cfg, 500 + seed, 0.5);
    auto input = random_tensor({16, 8}, 600 + seed);
    auto loss = [&] {
      return ctc::ctc_loss(model_forward(input, params), label, 2).loss;
    };
    auto grads = ModelParams<double>::zeros(cfg);
    BasicTensor<double> dinput;
    const double l = model_loss_and_grad(input, label, params, {}, grads, &dinput);
    CHECK(l == doctest::Approx(loss()).epsilon(1e-12));
    CHECK(oracle::max_rel_error(dinput.data, oracle::numeric_grad(input.data, loss, 1e-5), 1e-6) < 1e-3);
    const std::size_t k = params.fc_weight(0);
    CHECK(oracle::max_rel_error(grads[k].data, oracle::numeric_grad(params[k].data, loss, 1e-5), 1e-6) < 1e-3);
  }
}

TEST_CASE("model files round-trip") {
  const auto cfg = ModelConfig::compact(12);
  const auto params = init_params(cfg, 3);
  const auto path = std::filesystem::temp_directory_path() / "hwanno_model_rt.sgm";
  save_params(params, path);
  const auto back = load_params(path);
  CHECK(back.config == cfg);
  CHECK(back.names == params.names);
  for (std::size_t k = 0; k < params.tensors.size(); ++k) CHECK(back[k].data == params[k].data);
  std::filesystem::remove(path);
}

TEST_CASE("model archive rejects missing layers and bad versions") {
  const auto params = init_params(oracle::toy_config(), 3);
  auto archive = params_to_archive(params);
  auto parsed = TensorArchive::parse(archive.serialize());
  CHECK_NOTHROW(params_from_archive(parsed));

  TensorArchive missing;
  for (const auto& e : archive.entries())
    if (e.name != params.names.back()) missing.add(e.name, e.tensor);
  CHECK_THROWS_AS(params_from_archive(missing), Error);

  TensorArchive no_manifest;
  for (const auto& e : archive.entries())
    if (e.name != "manifest") no_manifest.add(e.name, e.tensor);
  CHECK_THROWS_AS(params_from_archive(no_manifest), Error);
}
