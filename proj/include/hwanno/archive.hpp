#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hwanno/tensor.hpp"

namespace hwanno {

// "SGM1" container: magic, then a run of named tensors until end of input.
// Each entry is u32 name length, name bytes, u32 rank, rank x u32 dims and the
// row-major f32 payload; every integer and float is little-endian.
struct NamedTensor {
  std::string name;
  Tensor tensor;
};

class TensorArchive {
 public:
  void add(std::string name, Tensor tensor);  // names are unique; throws InvalidArgument
  const Tensor& get(const std::string& name) const;  // throws ParseError
  const Tensor* find(const std::string& name) const;
  const std::vector<NamedTensor>& entries() const { return entries_; }

  std::vector<std::uint8_t> serialize() const;
  static TensorArchive parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static TensorArchive load(const std::filesystem::path& path);

 private:
  std::vector<NamedTensor> entries_;
};

}  // namespace hwanno
