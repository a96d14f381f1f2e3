#include "hwanno/cnn.hpp"

#include <Eigen/Dense>
#include <random>

#include "hwanno/error.hpp"

namespace hwanno {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Activations are (width, height, channels) row-major, i.e. a column-major
// channels x (width*height) matrix with cell index x*height + y.
template <typename T>
void im2col(const AlignedVector<T>& in, int w, int h, int c, int k, AlignedVector<T>& patches) {
  const int pad = k / 2;
  const std::size_t rows = static_cast<std::size_t>(k) * k * c;
  patches.assign(rows * w * h, T(0));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      T* col = &patches[(static_cast<std::size_t>(x) * h + y) * rows];
      for (int kx = 0; kx < k; ++kx) {
        const int sx = x + kx - pad;
        if (sx < 0 || sx >= w) continue;
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const T* src = &in[(static_cast<std::size_t>(sx) * h + sy) * c];
          std::copy(src, src + c, col + (kx * k + ky) * c);
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* patches, int w, int h, int c, int k, AlignedVector<T>& out) {
  const int pad = k / 2;
  const std::size_t rows = static_cast<std::size_t>(k) * k * c;
  out.assign(static_cast<std::size_t>(w) * h * c, T(0));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      const T* col = &patches[(static_cast<std::size_t>(x) * h + y) * rows];
      for (int kx = 0; kx < k; ++kx) {
        const int sx = x + kx - pad;
        if (sx < 0 || sx >= w) continue;
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          T* dst = &out[(static_cast<std::size_t>(sx) * h + sy) * c];
          const T* src = col + (kx * k + ky) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> cnn_forward(const BasicTensor<T>& input, const ModelParams<T>& params,
                           const ForwardOptions& opts, CnnCache<T>* cache) {
  const ModelConfig& cfg = params.config;
  const std::vector<std::size_t> expected{static_cast<std::size_t>(cfg.input_width),
                                          static_cast<std::size_t>(cfg.input_height)};
  if (input.dims != expected)
    throw Error(ErrorCode::ShapeMismatch,
                "input " + shape_string(input.dims) + ", model expects " + shape_string(expected));
  if (cache) *cache = CnnCache<T>{};

  int w = cfg.input_width, h = cfg.input_height, c = 1;
  AlignedVector<T> act = input.data;
  AlignedVector<T> patches;
  for (std::size_t i = 0; i < cfg.conv.size(); ++i) {
    const ConvBlock& blk = cfg.conv[i];
    const int k = blk.kernel, cout = blk.channels;
    const int n = w * h, rows = k * k * c;
    im2col(act, w, h, c, k, patches);

    AlignedVector<T> out(static_cast<std::size_t>(cout) * n);
    Eigen::Map<const RowMat<T>> wm(params[params.conv_weight(i)].ptr(), cout, rows);
    Eigen::Map<const Vec<T>> bias(params[params.conv_bias(i)].ptr(), cout);
    Eigen::Map<const Mat<T>> pm(patches.data(), rows, n);
    Eigen::Map<Mat<T>> om(out.data(), cout, n);
    om.noalias() = wm * pm;
    om.colwise() += bias;

    typename CnnCache<T>::Block rec;
    rec.width = w;
    rec.height = h;
    rec.active.resize(out.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
      rec.active[j] = out[j] > T(0);
      if (!rec.active[j]) out[j] = T(0);
    }

    if (blk.pool) {
      const int w2 = w / 2, h2 = h / 2;
      AlignedVector<T> pooled(static_cast<std::size_t>(w2) * h2 * cout);
      if (cache) rec.argmax.resize(pooled.size());
      for (int x = 0; x < w2; ++x) {
        for (int y = 0; y < h2; ++y) {
          for (int ch = 0; ch < cout; ++ch) {
            std::size_t best = (static_cast<std::size_t>(2 * x) * h + 2 * y) * cout + ch;
            for (int dx = 0; dx < 2; ++dx) {
              for (int dy = 0; dy < 2; ++dy) {
                const std::size_t idx =
                    (static_cast<std::size_t>(2 * x + dx) * h + 2 * y + dy) * cout + ch;
                if (out[idx] > out[best]) best = idx;
              }
            }
            const std::size_t o = (static_cast<std::size_t>(x) * h2 + y) * cout + ch;
            pooled[o] = out[best];
            if (cache) rec.argmax[o] = static_cast<std::uint32_t>(best);
          }
        }
      }
      out = std::move(pooled);
      w = w2;
      h = h2;
    }
    if (cache) {
      rec.patches = BasicTensor<T>({static_cast<std::size_t>(n), static_cast<std::size_t>(rows)},
                                   std::move(patches));
      cache->blocks.push_back(std::move(rec));
    }
    act = std::move(out);
    c = cout;
  }

  if (opts.training && opts.noise_sigma > 0) {
    std::mt19937_64 rng(opts.noise_seed);
    std::normal_distribution<double> noise(0.0, opts.noise_sigma);
    for (auto& v : act) v += static_cast<T>(noise(rng));
  }

  // Each grid column flattens to height*channels features.
  int dim = h * c;
  const int steps = w;
  for (int j = 0; j < cfg.fc_layers; ++j) {
    const int out_dim = cfg.fc_dim;
    AlignedVector<T> out(static_cast<std::size_t>(out_dim) * steps);
    Eigen::Map<const RowMat<T>> wm(params[params.fc_weight(j)].ptr(), out_dim, dim);
    Eigen::Map<const Vec<T>> bias(params[params.fc_bias(j)].ptr(), out_dim);
    Eigen::Map<const Mat<T>> xm(act.data(), dim, steps);
    Eigen::Map<Mat<T>> ym(out.data(), out_dim, steps);
    ym.noalias() = wm * xm;
    ym.colwise() += bias;
    std::vector<unsigned char> active(out.size());
    for (std::size_t q = 0; q < out.size(); ++q) {
      active[q] = out[q] > T(0);
      if (!active[q]) out[q] = T(0);
    }
    if (cache) {
      cache->fc_inputs.emplace_back(
          std::vector<std::size_t>{static_cast<std::size_t>(steps), static_cast<std::size_t>(dim)}, act);
      cache->fc_active.push_back(std::move(active));
    }
    act = std::move(out);
    dim = out_dim;
  }
  return BasicTensor<T>({static_cast<std::size_t>(steps), static_cast<std::size_t>(dim)},
                        std::move(act));
}

template <typename T>
BasicTensor<T> cnn_backward(const BasicTensor<T>& grad_output, const ModelParams<T>& params,
                            const CnnCache<T>& cache, ModelParams<T>& grads) {
  const ModelConfig& cfg = params.config;
  if (cache.blocks.size() != cfg.conv.size() ||
      cache.fc_inputs.size() != static_cast<std::size_t>(cfg.fc_layers))
    throw Error(ErrorCode::ShapeMismatch, "cnn cache does not match the model");
  const int steps = cfg.grid_width();
  if (grad_output.dims != std::vector<std::size_t>{static_cast<std::size_t>(steps),
                                                   static_cast<std::size_t>(cfg.fc_dim)})
    throw Error(ErrorCode::ShapeMismatch, "cnn gradient has shape " + shape_string(grad_output.dims));

  AlignedVector<T> g = grad_output.data;
  for (int j = cfg.fc_layers - 1; j >= 0; --j) {
    const auto& input = cache.fc_inputs[j];
    const int dim = static_cast<int>(input.dims[1]);
    const auto& active = cache.fc_active[j];
    for (std::size_t q = 0; q < g.size(); ++q)
      if (!active[q]) g[q] = T(0);
    Eigen::Map<const Mat<T>> gm(g.data(), cfg.fc_dim, steps);
    Eigen::Map<const Mat<T>> xm(input.ptr(), dim, steps);
    Eigen::Map<RowMat<T>> dw(grads[grads.fc_weight(j)].ptr(), cfg.fc_dim, dim);
    Eigen::Map<Vec<T>> db(grads[grads.fc_bias(j)].ptr(), cfg.fc_dim);
    dw.noalias() += gm * xm.transpose();
    db += gm.rowwise().sum();
    Eigen::Map<const RowMat<T>> wm(params[params.fc_weight(j)].ptr(), cfg.fc_dim, dim);
    AlignedVector<T> gin(static_cast<std::size_t>(dim) * steps);
    Eigen::Map<Mat<T>>(gin.data(), dim, steps).noalias() = wm.transpose() * gm;
    g = std::move(gin);
  }

  for (int i = static_cast<int>(cfg.conv.size()) - 1; i >= 0; --i) {
    const ConvBlock& blk = cfg.conv[i];
    const auto& rec = cache.blocks[i];
    const int w = rec.width, h = rec.height, n = w * h;
    const int cin = i == 0 ? 1 : cfg.conv[i - 1].channels;
    const int k = blk.kernel, cout = blk.channels, rows = k * k * cin;

    AlignedVector<T> gconv;
    if (blk.pool) {
      gconv.assign(static_cast<std::size_t>(cout) * n, T(0));
      for (std::size_t o = 0; o < g.size(); ++o) gconv[rec.argmax[o]] += g[o];
    } else {
      gconv = std::move(g);
    }
    for (std::size_t q = 0; q < gconv.size(); ++q)
      if (!rec.active[q]) gconv[q] = T(0);

    Eigen::Map<const Mat<T>> gm(gconv.data(), cout, n);
    Eigen::Map<const Mat<T>> pm(rec.patches.ptr(), rows, n);
    Eigen::Map<RowMat<T>> dw(grads[grads.conv_weight(i)].ptr(), cout, rows);
    Eigen::Map<Vec<T>> db(grads[grads.conv_bias(i)].ptr(), cout);
    dw.noalias() += gm * pm.transpose();
    db += gm.rowwise().sum();

    Eigen::Map<const RowMat<T>> wm(params[params.conv_weight(i)].ptr(), cout, rows);
    Mat<T> dp = wm.transpose() * gm;
    col2im(dp.data(), w, h, cin, k, g);
  }
  return BasicTensor<T>({static_cast<std::size_t>(cfg.input_width),
                         static_cast<std::size_t>(cfg.input_height)},
                        std::move(g));
}

template BasicTensor<float> cnn_forward(const BasicTensor<float>&, const ModelParams<float>&,
                                        const ForwardOptions&, CnnCache<float>*);
template BasicTensor<double> cnn_forward(const BasicTensor<double>&, const ModelParams<double>&,
                                         const ForwardOptions&, CnnCache<double>*);
template BasicTensor<float> cnn_backward(const BasicTensor<float>&, const ModelParams<float>&,
                                         const CnnCache<float>&, ModelParams<float>&);
template BasicTensor<double> cnn_backward(const BasicTensor<double>&, const ModelParams<double>&,
                                          const CnnCache<double>&, ModelParams<double>&);

}  // namespace hwanno
