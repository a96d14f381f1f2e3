#include "hwanno/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hwanno/error.hpp"

namespace hwanno::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

template <typename T>
void check_logits(const BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw Error(ErrorCode::ShapeMismatch, "logits must be (T, K)");
}

// Row-wise log-softmax in double precision.
template <typename T>
std::vector<double> log_probs(const BasicTensor<T>& logits) {
  const std::size_t frames = logits.dims[0], k = logits.dims[1];
  std::vector<double> out(frames * k);
  for (std::size_t t = 0; t < frames; ++t) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) m = std::max(m, static_cast<double>(logits.at(t, c)));
    double z = 0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(static_cast<double>(logits.at(t, c)) - m);
    const double lz = m + std::log(z);
    for (std::size_t c = 0; c < k; ++c) out[t * k + c] = static_cast<double>(logits.at(t, c)) - lz;
  }
  return out;
}

struct Lattice {
  std::vector<int> ext;       // blank-augmented label, length 2L+1
  std::vector<double> alpha;  // (T, S), log space, includes emission at t
  std::vector<double> beta;   // (T, S), log space, excludes emission at t
  double log_p = kNegInf;
};

Lattice run_lattice(const std::vector<double>& lp, std::size_t frames, std::size_t k,
                    std::span<const int> label, int blank, bool want_beta) {
  Lattice lat;
  lat.ext.reserve(2 * label.size() + 1);
  lat.ext.push_back(blank);
  for (int l : label) {
    lat.ext.push_back(l);
    lat.ext.push_back(blank);
  }
  const std::size_t s_len = lat.ext.size();
  auto skip_ok = [&](std::size_t s) {  // may jump from s-2 to s
    return s >= 2 && lat.ext[s] != blank && lat.ext[s] != lat.ext[s - 2];
  };
  auto emit = [&](std::size_t t, std::size_t s) { return lp[t * k + lat.ext[s]]; };

  lat.alpha.assign(frames * s_len, kNegInf);
  auto A = [&](std::size_t t, std::size_t s) -> double& { return lat.alpha[t * s_len + s]; };
  A(0, 0) = emit(0, 0);
  if (s_len > 1) A(0, 1) = emit(0, 1);
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double v = A(t - 1, s);
      if (s >= 1) v = log_add(v, A(t - 1, s - 1));
      if (skip_ok(s)) v = log_add(v, A(t - 1, s - 2));
      A(t, s) = v == kNegInf ? kNegInf : v + emit(t, s);
    }
  }
  lat.log_p = A(frames - 1, s_len - 1);
  if (s_len > 1) lat.log_p = log_add(lat.log_p, A(frames - 1, s_len - 2));

  if (want_beta) {
    lat.beta.assign(frames * s_len, kNegInf);
    auto B = [&](std::size_t t, std::size_t s) -> double& { return lat.beta[t * s_len + s]; };
    B(frames - 1, s_len - 1) = 0.0;
    if (s_len > 1) B(frames - 1, s_len - 2) = 0.0;
    for (std::size_t t = frames - 1; t-- > 0;) {
      for (std::size_t s = 0; s < s_len; ++s) {
        double v = B(t + 1, s) == kNegInf ? kNegInf : B(t + 1, s) + emit(t + 1, s);
        if (s + 1 < s_len && B(t + 1, s + 1) != kNegInf)
          v = log_add(v, B(t + 1, s + 1) + emit(t + 1, s + 1));
        if (s + 2 < s_len && skip_ok(s + 2) && B(t + 1, s + 2) != kNegInf)
          v = log_add(v, B(t + 1, s + 2) + emit(t + 1, s + 2));
        B(t, s) = v;
      }
    }
  }
  return lat;
}

template <typename T>
void check_label(const BasicTensor<T>& logits, std::span<const int> label, int blank) {
  check_logits(logits);
  const auto k = static_cast<int>(logits.dims[1]);
  if (blank < 0 || blank >= k) throw Error(ErrorCode::InvalidArgument, "blank index out of range");
  for (int l : label)
    if (l < 0 || l >= k || l == blank)
      throw Error(ErrorCode::InvalidArgument, "label index " + std::to_string(l) + " is not a character class");
  if (required_frames(label) > logits.dims[0])
    throw Error(ErrorCode::InfeasibleLabel,
                "label needs " + std::to_string(required_frames(label)) + " frames, have " +
                    std::to_string(logits.dims[0]));
}

}  // namespace

std::size_t required_frames(std::span<const int> label) {
  std::size_t n = label.size();
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++n;
  return n;
}

template <typename T>
BasicTensor<T> log_softmax(const BasicTensor<T>& logits) {
  check_logits(logits);
  const auto lp = log_probs(logits);
  BasicTensor<T> out(logits.dims);
  for (std::size_t i = 0; i < lp.size(); ++i) out.data[i] = static_cast<T>(lp[i]);
  return out;
}

template <typename T>
T ctc_log_prob(const BasicTensor<T>& logits, std::span<const int> label, int blank) {
  check_label(logits, label, blank);
  const auto lp = log_probs(logits);
  return static_cast<T>(run_lattice(lp, logits.dims[0], logits.dims[1], label, blank, false).log_p);
}

template <typename T>
LossResult<T> ctc_loss(const BasicTensor<T>& logits, std::span<const int> label, int blank) {
  check_label(logits, label, blank);
  const std::size_t frames = logits.dims[0], k = logits.dims[1];
  const auto lp = log_probs(logits);
  const Lattice lat = run_lattice(lp, frames, k, label, blank, true);
  const std::size_t s_len = lat.ext.size();

  LossResult<T> result{static_cast<T>(-lat.log_p), BasicTensor<T>(logits.dims)};
  std::vector<double> occupancy(k);
  for (std::size_t t = 0; t < frames; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kNegInf);
    for (std::size_t s = 0; s < s_len; ++s) {
      const double a = lat.alpha[t * s_len + s], b = lat.beta[t * s_len + s];
      if (a == kNegInf || b == kNegInf) continue;
      auto& o = occupancy[static_cast<std::size_t>(lat.ext[s])];
      o = log_add(o, a + b);
    }
    for (std::size_t c = 0; c < k; ++c) {
      const double post = occupancy[c] == kNegInf ? 0.0 : std::exp(occupancy[c] - lat.log_p);
      result.grad.data[t * k + c] = static_cast<T>(std::exp(lp[t * k + c]) - post);
    }
  }
  return result;
}

template LossResult<float> ctc_loss(const BasicTensor<float>&, std::span<const int>, int);
template LossResult<double> ctc_loss(const BasicTensor<double>&, std::span<const int>, int);
template float ctc_log_prob(const BasicTensor<float>&, std::span<const int>, int);
template double ctc_log_prob(const BasicTensor<double>&, std::span<const int>, int);
template BasicTensor<float> log_softmax(const BasicTensor<float>&);
template BasicTensor<double> log_softmax(const BasicTensor<double>&);

Decoded greedy_decode(const Tensor& logits, int blank) {
  check_logits(logits);
  const std::size_t frames = logits.dims[0], k = logits.dims[1];
  const auto lp = log_probs(logits);
  Decoded out;
  int prev = -1;
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c)
      if (lp[t * k + c] > lp[t * k + best]) best = c;
    out.log_prob += lp[t * k + best];
    const int cls = static_cast<int>(best);
    if (cls != blank && cls != prev) out.labels.push_back(cls);
    prev = cls;
  }
  return out;
}

Decoded beam_decode(const Tensor& logits, int blank, int beam_width) {
  check_logits(logits);
  if (beam_width < 1) throw Error(ErrorCode::InvalidArgument, "beam width must be >= 1");
  const std::size_t frames = logits.dims[0], k = logits.dims[1];
  const auto lp = log_probs(logits);

  struct Probs {
    double blank = kNegInf;      // paths ending in blank
    double non_blank = kNegInf;  // paths ending in the last label
    double total() const { return log_add(blank, non_blank); }
  };
  using Beams = std::map<std::vector<int>, Probs>;

  auto prune = [&](Beams& beams) {
    if (beams.size() <= static_cast<std::size_t>(beam_width)) return;
    std::vector<Beams::iterator> order;
    for (auto it = beams.begin(); it != beams.end(); ++it) order.push_back(it);
    // Map order is lexicographic, so stable_sort leaves ties lexicographic.
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a->second.total() > b->second.total();
    });
    Beams kept;
    for (int i = 0; i < beam_width; ++i) kept.insert(*order[static_cast<std::size_t>(i)]);
    beams = std::move(kept);
  };

  Beams beams;
  beams[{}].blank = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    const double* row = &lp[t * k];
    Beams next;
    for (const auto& [prefix, p] : beams) {
      const double total = p.total();
      auto& same = next[prefix];
      same.blank = log_add(same.blank, total + row[blank]);
      if (!prefix.empty())
        same.non_blank = log_add(same.non_blank, p.non_blank + row[prefix.back()]);
      for (std::size_t c = 0; c < k; ++c) {
        const int cls = static_cast<int>(c);
        if (cls == blank) continue;
        std::vector<int> extended = prefix;
        extended.push_back(cls);
        auto& ext = next[extended];
        // A repeated label needs a blank in between to count twice.
        const double from = !prefix.empty() && prefix.back() == cls ? p.blank : total;
        ext.non_blank = log_add(ext.non_blank, from + row[c]);
      }
    }
    prune(next);
    beams = std::move(next);
  }

  Decoded best;
  double best_total = kNegInf;
  bool found = false;
  for (const auto& [prefix, p] : beams) {
    const double total = p.total();
    if (!found || total > best_total) {
      best.labels = prefix;
      best_total = total;
      found = true;
    }
  }
  best.log_prob = best_total;
  return best;
}

std::string greedy_decode(const Tensor& logits, const CharSet& charset) {
  return charset.decode(greedy_decode(logits, charset.blank_index()).labels);
}

std::string beam_decode(const Tensor& logits, const CharSet& charset, int beam_width) {
  return charset.decode(beam_decode(logits, charset.blank_index(), beam_width).labels);
}

}  // namespace hwanno::ctc
