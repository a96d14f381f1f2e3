#include "hwanno/model.hpp"

#include <cmath>
#include <random>

#include "json.hpp"

#include "hwanno/error.hpp"

namespace hwanno {

namespace {

constexpr int kManifestVersion = 1;

void fail(const std::string& msg) { throw Error(ErrorCode::ShapeMismatch, msg); }

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& b : c.conv)
    conv.push_back({{"kernel", b.kernel}, {"channels", b.channels}, {"pool", b.pool}});
  return {{"input_width", c.input_width}, {"input_height", c.input_height},
          {"conv", conv},                 {"fc_dim", c.fc_dim},
          {"fc_layers", c.fc_layers},     {"hidden", c.hidden},
          {"num_classes", c.num_classes}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_width = j.at("input_width").get<int>();
  c.input_height = j.at("input_height").get<int>();
  c.conv.clear();
  for (const auto& b : j.at("conv"))
    c.conv.push_back({b.at("kernel").get<int>(), b.at("channels").get<int>(), b.at("pool").get<bool>()});
  c.fc_dim = j.at("fc_dim").get<int>();
  c.fc_layers = j.at("fc_layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  return c;
}

}  // namespace

ModelConfig ModelConfig::standard() { return ModelConfig{}; }

ModelConfig ModelConfig::compact(int num_classes) {
  ModelConfig c;
  c.conv = {{7, 8, true},   {5, 16, true},  {5, 16, false}, {3, 16, false},
            {3, 16, false}, {3, 16, false}, {3, 16, false}, {3, 16, false}};
  c.fc_dim = 128;
  c.hidden = 48;
  c.num_classes = num_classes;
  return c;
}

int ModelConfig::grid_width() const {
  int w = input_width;
  for (const auto& b : conv)
    if (b.pool) w /= 2;
  return w;
}

int ModelConfig::grid_height() const {
  int h = input_height;
  for (const auto& b : conv)
    if (b.pool) h /= 2;
  return h;
}

void ModelConfig::validate() const {
  if (input_width < 1 || input_height < 1) fail("input dimensions must be positive");
  if (conv.empty()) fail("at least one conv block is required");
  int w = input_width, h = input_height;
  for (const auto& b : conv) {
    if (b.kernel < 1 || b.kernel % 2 == 0) fail("conv kernels must be odd and positive");
    if (b.channels < 1) fail("conv channels must be positive");
    if (b.pool) {
      if (w % 2 || h % 2) fail("pooling needs even spatial extents");
      w /= 2;
      h /= 2;
    }
  }
  if (fc_layers < 1) fail("at least one fully connected layer is required");
  if (fc_dim < 1 || fc_dim % h != 0) fail("fc_dim must be a positive multiple of the grid height");
  if (hidden < 1) fail("hidden size must be positive");
  if (num_classes < 2) fail("need at least one character class plus blank");
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams<T> p;
  p.config = config;
  auto add = [&](std::string name, std::vector<std::size_t> dims) {
    p.names.push_back(std::move(name));
    p.tensors.emplace_back(std::move(dims));
  };
  auto z = [](int v) { return static_cast<std::size_t>(v); };
  int in_ch = 1;
  for (std::size_t i = 0; i < config.conv.size(); ++i) {
    const auto& b = config.conv[i];
    add("conv" + std::to_string(i) + ".weight", {z(b.channels), z(b.kernel), z(b.kernel), z(in_ch)});
    add("conv" + std::to_string(i) + ".bias", {z(b.channels)});
    in_ch = b.channels;
  }
  int in_dim = config.grid_height() * config.conv_out_channels();
  for (int j = 0; j < config.fc_layers; ++j) {
    add("fc" + std::to_string(j) + ".weight", {z(config.fc_dim), z(in_dim)});
    add("fc" + std::to_string(j) + ".bias", {z(config.fc_dim)});
    in_dim = config.fc_dim;
  }
  const std::size_t gates = z(kGates * config.hidden);
  for (int d = 0; d < kDirections; ++d) {
    const std::string pre = "lstm" + std::to_string(d);
    add(pre + ".w_in", {gates, z(config.lstm_input())});
    add(pre + ".w_left", {gates, z(config.hidden)});
    add(pre + ".w_up", {gates, z(config.hidden)});
    add(pre + ".bias", {gates});
  }
  add("proj.weight", {z(config.num_classes), z(config.hidden)});
  add("proj.bias", {z(config.num_classes)});
  return p;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto& t : tensors)
    for (T v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
void ModelParams<T>::fill(T v) {
  for (auto& t : tensors) t.fill(v);
}

template struct ModelParams<float>;
template struct ModelParams<double>;

ModelParams<float> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto p = ModelParams<float>::zeros(config);
  std::mt19937_64 rng(seed);
  auto glorot = [&](Tensor& t, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data) v = static_cast<float>(dist(rng));
  };
  for (std::size_t i = 0; i < config.conv.size(); ++i) {
    auto& w = p[p.conv_weight(i)];
    const double area = static_cast<double>(w.dims[1] * w.dims[2]);
    glorot(w, area * w.dims[3], area * w.dims[0]);
  }
  for (int j = 0; j < config.fc_layers; ++j) {
    auto& w = p[p.fc_weight(j)];
    glorot(w, w.dims[1], w.dims[0]);
  }
  const auto h = static_cast<std::size_t>(config.hidden);
  for (int d = 0; d < kDirections; ++d) {
    for (auto idx : {p.lstm_w_in(d), p.lstm_w_left(d), p.lstm_w_up(d)}) {
      auto& w = p[idx];
      glorot(w, w.dims[1], h);
    }
    auto& b = p[p.lstm_bias(d)];
    for (std::size_t k = h; k < 3 * h; ++k) b[k] = 1.0f;  // both forget gates
  }
  auto& proj = p[p.proj_weight()];
  glorot(proj, proj.dims[1], proj.dims[0]);
  return p;
}

TensorArchive params_to_archive(const ModelParams<float>& params) {
  const nlohmann::json manifest = {{"format", "hwanno-recognizer"},
                                   {"version", kManifestVersion},
                                   {"config", config_to_json(params.config)},
                                   {"layers", params.names}};
  const std::string text = manifest.dump();
  Tensor bytes({text.size()});
  for (std::size_t i = 0; i < text.size(); ++i)
    bytes[i] = static_cast<float>(static_cast<unsigned char>(text[i]));
  TensorArchive archive;
  archive.add("manifest", std::move(bytes));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) archive.add(params.names[i], params.tensors[i]);
  return archive;
}

ModelParams<float> params_from_archive(const TensorArchive& archive) {
  const Tensor& bytes = archive.get("manifest");
  std::string text;
  text.reserve(bytes.size());
  for (float v : bytes.data) text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model manifest: ") + e.what());
  }
  if (!manifest.is_object()) throw Error(ErrorCode::ParseError, "model manifest is not an object");
  if (manifest.value("version", 0) != kManifestVersion)
    throw Error(ErrorCode::UnsupportedVersion, "model manifest version");
  ModelConfig config;
  std::vector<std::string> layers;
  try {
    config = config_from_json(manifest.at("config"));
    layers = manifest.at("layers").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model manifest: ") + e.what());
  }
  auto params = ModelParams<float>::zeros(config);
  if (layers != params.names)
    throw Error(ErrorCode::ShapeMismatch, "model layers do not match the architecture");
  for (std::size_t i = 0; i < params.names.size(); ++i) {
    const Tensor& t = archive.get(params.names[i]);
    if (t.dims != params.tensors[i].dims)
      throw Error(ErrorCode::ShapeMismatch, params.names[i] + " has shape " + shape_string(t.dims) +
                                                ", expected " + shape_string(params.tensors[i].dims));
    params.tensors[i] = t;
  }
  if (!params.all_finite()) throw Error(ErrorCode::ParseError, "model contains non-finite values");
  return params;
}

void save_params(const ModelParams<float>& params, const std::filesystem::path& path) {
  params_to_archive(params).save(path);
}

ModelParams<float> load_params(const std::filesystem::path& path) {
  return params_from_archive(TensorArchive::load(path));
}

}  // namespace hwanno
