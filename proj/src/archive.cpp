#include "hwanno/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hwanno/error.hpp"

namespace hwanno {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'M', '1'};
// Guards against absurd allocations from corrupt headers.
constexpr std::uint32_t kMaxRank = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::ParseError, "tensor archive truncated");
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void TensorArchive::add(std::string name, Tensor tensor) {
  if (find(name)) throw Error(ErrorCode::InvalidArgument, "duplicate tensor '" + name + "'");
  entries_.push_back({std::move(name), std::move(tensor)});
}

const Tensor* TensorArchive::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e.tensor;
  return nullptr;
}

const Tensor& TensorArchive::get(const std::string& name) const {
  if (const Tensor* t = find(name)) return *t;
  throw Error(ErrorCode::ParseError, "tensor archive has no entry '" + name + "'");
}

std::vector<std::uint8_t> TensorArchive::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  for (const auto& e : entries_) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    put_u32(out, static_cast<std::uint32_t>(e.tensor.dims.size()));
    for (auto d : e.tensor.dims) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : e.tensor.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

TensorArchive TensorArchive::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::ParseError, "missing SGM1 magic");
  Reader r(bytes.subspan(4));
  TensorArchive archive;
  while (!r.done()) {
    const auto name_len = r.u32();
    std::string name = r.str(name_len);
    if (archive.find(name)) throw Error(ErrorCode::ParseError, "duplicate tensor '" + name + "'");
    const auto rank = r.u32();
    if (rank == 0 || rank > kMaxRank)
      throw Error(ErrorCode::ParseError, "bad rank for tensor '" + name + "'");
    std::vector<std::size_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
      d = r.u32();
      if (d == 0) throw Error(ErrorCode::ParseError, "zero extent in '" + name + "'");
      count *= d;
      if (count > r.remaining() / 4 + 1)
        throw Error(ErrorCode::ParseError, "tensor archive truncated");
    }
    r.need(count * 4);
    std::vector<float> data(count);
    for (auto& v : data) v = r.f32();
    archive.entries_.push_back({std::move(name), Tensor(std::move(dims), std::move(data))});
  }
  return archive;
}

void TensorArchive::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

TensorArchive TensorArchive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse(bytes);
}

}  // namespace hwanno
