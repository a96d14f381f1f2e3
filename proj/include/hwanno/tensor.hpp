#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <string>
#include <vector>

#include "hwanno/error.hpp"

namespace hwanno {

// Cache-line aligned storage. Vectorised kernels peel a different number of
// leading elements depending on the buffer address, which changes float
// rounding; a fixed alignment keeps results identical from run to run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

// Shaped row-major array. Float is the storage type for models and
// activations; double instantiations back the finite-difference checks.
template <typename T>
struct BasicTensor {
  std::vector<std::size_t> dims;
  AlignedVector<T> data;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> d, T fill = T(0))
      : dims(std::move(d)), data(count(dims), fill) {}
  BasicTensor(std::vector<std::size_t> d, const std::vector<T>& values)
      : dims(std::move(d)), data(values.begin(), values.end()) {
    if (data.size() != count(dims))
      throw Error(ErrorCode::ShapeMismatch, "tensor data length mismatch");
  }
  BasicTensor(std::vector<std::size_t> d, AlignedVector<T> values)
      : dims(std::move(d)), data(std::move(values)) {
    if (data.size() != count(dims))
      throw Error(ErrorCode::ShapeMismatch, "tensor data length mismatch");
  }

  static std::size_t count(const std::vector<std::size_t>& d) {
    for (auto e : d)
      if (e == 0) throw Error(ErrorCode::ShapeMismatch, "zero tensor extent");
    return std::accumulate(d.begin(), d.end(), std::size_t{1},
                           std::multiplies<>());
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return dims.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }

  T& at(std::size_t i, std::size_t j) { return data[i * dims[1] + j]; }
  T at(std::size_t i, std::size_t j) const { return data[i * dims[1] + j]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  template <typename U>
  BasicTensor<U> cast() const {
    BasicTensor<U> out;
    out.dims = dims;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;
};

using Tensor = BasicTensor<float>;

inline std::string shape_string(const std::vector<std::size_t>& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

}  // namespace hwanno
