#include "hwanno/mdlstm.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hwanno/error.hpp"

namespace hwanno {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Direction d scans x forward when bit 0 is clear and y forward when bit 1 is
// clear; the recurrent inputs come from the previous cell along each axis.
struct Scan {
  int sx, sy;
  explicit Scan(int d) : sx(d & 1 ? -1 : 1), sy(d & 2 ? -1 : 1) {}
};

struct Grid {
  int width, height;
  int cell(int x, int y) const { return x * height + y; }
};

template <typename Fn>
void for_each_cell(const Grid& grid, const Scan& scan, bool reverse, Fn&& fn) {
  const int n = grid.width * grid.height;
  for (int step = 0; step < n; ++step) {
    const int k = reverse ? n - 1 - step : step;
    const int xi = k / grid.height, yi = k % grid.height;
    const int x = scan.sx > 0 ? xi : grid.width - 1 - xi;
    const int y = scan.sy > 0 ? yi : grid.height - 1 - yi;
    const int left_x = x - scan.sx, up_y = y - scan.sy;
    const int left = left_x >= 0 && left_x < grid.width ? grid.cell(left_x, y) : -1;
    const int up = up_y >= 0 && up_y < grid.height ? grid.cell(x, up_y) : -1;
    fn(grid.cell(x, y), x, left, up);
  }
}

template <typename T>
T sigmoid(T a) {
  return T(1) / (T(1) + std::exp(-a));
}

}  // namespace

template <typename T>
BasicTensor<T> mdlstm_forward(const BasicTensor<T>& features, const ModelParams<T>& params,
                              MdLstmCache<T>* cache) {
  const ModelConfig& cfg = params.config;
  const Grid grid{cfg.grid_width(), cfg.grid_height()};
  const int cin = cfg.lstm_input(), hd = cfg.hidden, g5 = kGates * hd;
  const int n = grid.width * grid.height, classes = cfg.num_classes;
  if (features.dims != std::vector<std::size_t>{static_cast<std::size_t>(grid.width),
                                                static_cast<std::size_t>(cfg.fc_dim)})
    throw Error(ErrorCode::ShapeMismatch, "lstm input " + shape_string(features.dims) +
                                              " does not match the model grid");

  Eigen::Map<const Mat<T>> in(features.ptr(), cin, n);
  Mat<T> summed = Mat<T>::Zero(hd, grid.width);
  MdLstmCache<T> local;
  MdLstmCache<T>& c = cache ? *cache : local;

  for (int d = 0; d < kDirections; ++d) {
    auto& dir = c.dirs[d];
    dir.gates.assign(static_cast<std::size_t>(g5) * n, T(0));
    dir.cell.assign(static_cast<std::size_t>(hd) * n, T(0));
    dir.output.assign(static_cast<std::size_t>(hd) * n, T(0));
    Eigen::Map<Mat<T>> gates(dir.gates.data(), g5, n);
    Eigen::Map<Mat<T>> cell(dir.cell.data(), hd, n);
    Eigen::Map<Mat<T>> out(dir.output.data(), hd, n);
    Eigen::Map<const RowMat<T>> w_in(params[params.lstm_w_in(d)].ptr(), g5, cin);
    Eigen::Map<const RowMat<T>> w_left(params[params.lstm_w_left(d)].ptr(), g5, hd);
    Eigen::Map<const RowMat<T>> w_up(params[params.lstm_w_up(d)].ptr(), g5, hd);
    Eigen::Map<const Vec<T>> bias(params[params.lstm_bias(d)].ptr(), g5);

    gates.noalias() = w_in * in;
    gates.colwise() += bias;
    Vec<T> a(g5);
    for_each_cell(grid, Scan(d), false, [&](int cell_idx, int x, int left, int up) {
      a = gates.col(cell_idx);
      if (left >= 0) a.noalias() += w_left * out.col(left);
      if (up >= 0) a.noalias() += w_up * out.col(up);
      for (int k = 0; k < 4 * hd; ++k) a[k] = sigmoid(a[k]);
      for (int k = 4 * hd; k < g5; ++k) a[k] = std::tanh(a[k]);
      gates.col(cell_idx) = a;
      for (int k = 0; k < hd; ++k) {
        T cv = a[k] * a[4 * hd + k];
        if (left >= 0) cv += a[hd + k] * cell(k, left);
        if (up >= 0) cv += a[2 * hd + k] * cell(k, up);
        cell(k, cell_idx) = cv;
        out(k, cell_idx) = a[3 * hd + k] * std::tanh(cv);
      }
      summed.col(x) += out.col(cell_idx);
    });
  }

  BasicTensor<T> logits({static_cast<std::size_t>(grid.width), static_cast<std::size_t>(classes)});
  Eigen::Map<const RowMat<T>> proj(params[params.proj_weight()].ptr(), classes, hd);
  Eigen::Map<const Vec<T>> pb(params[params.proj_bias()].ptr(), classes);
  Eigen::Map<Mat<T>> lm(logits.ptr(), classes, grid.width);
  lm.noalias() = proj * summed;
  lm.colwise() += pb;

  if (cache) {
    c.input = features.data;
    c.summed.assign(summed.data(), summed.data() + summed.size());
  }
  return logits;
}

template <typename T>
BasicTensor<T> mdlstm_backward(const BasicTensor<T>& grad_logits, const ModelParams<T>& params,
                               const MdLstmCache<T>& cache, ModelParams<T>& grads) {
  const ModelConfig& cfg = params.config;
  const Grid grid{cfg.grid_width(), cfg.grid_height()};
  const int cin = cfg.lstm_input(), hd = cfg.hidden, g5 = kGates * hd;
  const int n = grid.width * grid.height, classes = cfg.num_classes;
  if (grad_logits.dims != std::vector<std::size_t>{static_cast<std::size_t>(grid.width),
                                                   static_cast<std::size_t>(classes)})
    throw Error(ErrorCode::ShapeMismatch, "logit gradient has shape " + shape_string(grad_logits.dims));
  if (cache.input.size() != static_cast<std::size_t>(cin) * n)
    throw Error(ErrorCode::ShapeMismatch, "lstm cache does not match the model");

  Eigen::Map<const Mat<T>> gl(grad_logits.ptr(), classes, grid.width);
  Eigen::Map<const Mat<T>> summed(cache.summed.data(), hd, grid.width);
  Eigen::Map<const RowMat<T>> proj(params[params.proj_weight()].ptr(), classes, hd);
  Eigen::Map<RowMat<T>> dproj(grads[grads.proj_weight()].ptr(), classes, hd);
  Eigen::Map<Vec<T>> dpb(grads[grads.proj_bias()].ptr(), classes);
  dproj.noalias() += gl * summed.transpose();
  dpb += gl.rowwise().sum();
  const Mat<T> dsum = proj.transpose() * gl;

  Eigen::Map<const Mat<T>> in(cache.input.data(), cin, n);
  BasicTensor<T> dfeatures({static_cast<std::size_t>(grid.width), static_cast<std::size_t>(cfg.fc_dim)});
  Eigen::Map<Mat<T>> din(dfeatures.ptr(), cin, n);

  Mat<T> dh(hd, n), dc(hd, n), da(g5, n), h_left(hd, n), h_up(hd, n);
  for (int d = 0; d < kDirections; ++d) {
    const auto& dir = cache.dirs[d];
    Eigen::Map<const Mat<T>> gates(dir.gates.data(), g5, n);
    Eigen::Map<const Mat<T>> cell(dir.cell.data(), hd, n);
    Eigen::Map<const Mat<T>> out(dir.output.data(), hd, n);
    Eigen::Map<const RowMat<T>> w_in(params[params.lstm_w_in(d)].ptr(), g5, cin);
    Eigen::Map<const RowMat<T>> w_left(params[params.lstm_w_left(d)].ptr(), g5, hd);
    Eigen::Map<const RowMat<T>> w_up(params[params.lstm_w_up(d)].ptr(), g5, hd);

    for (int x = 0; x < grid.width; ++x)
      for (int y = 0; y < grid.height; ++y) dh.col(grid.cell(x, y)) = dsum.col(x);
    dc.setZero();
    h_left.setZero();
    h_up.setZero();

    for_each_cell(grid, Scan(d), true, [&](int ci, int, int left, int up) {
      for (int k = 0; k < hd; ++k) {
        const T i = gates(k, ci), fl = gates(hd + k, ci), fu = gates(2 * hd + k, ci);
        const T o = gates(3 * hd + k, ci), g = gates(4 * hd + k, ci);
        const T tc = std::tanh(cell(k, ci));
        const T dhv = dh(k, ci);
        const T dcv = dc(k, ci) + dhv * o * (T(1) - tc * tc);
        da(k, ci) = dcv * g * i * (T(1) - i);
        da(3 * hd + k, ci) = dhv * tc * o * (T(1) - o);
        da(4 * hd + k, ci) = dcv * i * (T(1) - g * g);
        if (left >= 0) {
          da(hd + k, ci) = dcv * cell(k, left) * fl * (T(1) - fl);
          dc(k, left) += dcv * fl;
        } else {
          da(hd + k, ci) = T(0);
        }
        if (up >= 0) {
          da(2 * hd + k, ci) = dcv * cell(k, up) * fu * (T(1) - fu);
          dc(k, up) += dcv * fu;
        } else {
          da(2 * hd + k, ci) = T(0);
        }
      }
      if (left >= 0) {
        dh.col(left).noalias() += w_left.transpose() * da.col(ci);
        h_left.col(ci) = out.col(left);
      }
      if (up >= 0) {
        dh.col(up).noalias() += w_up.transpose() * da.col(ci);
        h_up.col(ci) = out.col(up);
      }
    });

    Eigen::Map<RowMat<T>> dw_in(grads[grads.lstm_w_in(d)].ptr(), g5, cin);
    Eigen::Map<RowMat<T>> dw_left(grads[grads.lstm_w_left(d)].ptr(), g5, hd);
    Eigen::Map<RowMat<T>> dw_up(grads[grads.lstm_w_up(d)].ptr(), g5, hd);
    Eigen::Map<Vec<T>> db(grads[grads.lstm_bias(d)].ptr(), g5);
    dw_in.noalias() += da * in.transpose();
    dw_left.noalias() += da * h_left.transpose();
    dw_up.noalias() += da * h_up.transpose();
    db += da.rowwise().sum();
    din.noalias() += w_in.transpose() * da;
  }
  return dfeatures;
}

template BasicTensor<float> mdlstm_forward(const BasicTensor<float>&, const ModelParams<float>&,
                                           MdLstmCache<float>*);
template BasicTensor<double> mdlstm_forward(const BasicTensor<double>&, const ModelParams<double>&,
                                            MdLstmCache<double>*);
template BasicTensor<float> mdlstm_backward(const BasicTensor<float>&, const ModelParams<float>&,
                                            const MdLstmCache<float>&, ModelParams<float>&);
template BasicTensor<double> mdlstm_backward(const BasicTensor<double>&, const ModelParams<double>&,
                                             const MdLstmCache<double>&, ModelParams<double>&);

}  // namespace hwanno
