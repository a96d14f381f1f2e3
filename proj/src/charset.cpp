#include "hwanno/charset.hpp"

#include <fstream>

#include "hwanno/error.hpp"
#include "hwanno/utf8.hpp"

namespace hwanno {

CharSet::CharSet(std::u32string chars) : chars_(std::move(chars)) {
  if (chars_.empty()) throw Error(ErrorCode::InvalidArgument, "empty character set");
  for (std::size_t i = 0; i < chars_.size(); ++i) {
    if (!index_.emplace(chars_[i], static_cast<int>(i)).second)
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate character '" + utf8::encode(chars_[i]) + "' in character set");
  }
}

CharSet CharSet::iam() {
  return CharSet(
      U" !\"#&'()*+,-./0123456789:;?"
      U"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz");
}

CharSet CharSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open charset " + path.string());
  std::u32string chars;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cps = utf8::decode(line);
    if (cps.size() != 1)
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                             ": expected exactly one character");
    chars.push_back(cps[0]);
  }
  if (chars.size() != kStandardSize)
    throw Error(ErrorCode::ParseError, "charset must list exactly 79 characters, found " +
                                           std::to_string(chars.size()));
  return CharSet(std::move(chars));
}

void CharSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write charset " + path.string());
  for (char32_t c : chars_) out << utf8::encode(c) << '\n';
}

std::optional<int> CharSet::index_of(char32_t c) const {
  auto it = index_.find(c);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> CharSet::encode(std::string_view text) const {
  std::vector<int> out;
  for (char32_t c : utf8::decode(text)) {
    auto idx = index_of(c);
    if (!idx)
      throw Error(ErrorCode::InvalidArgument,
                  "character '" + utf8::encode(c) + "' is not in the character set");
    out.push_back(*idx);
  }
  return out;
}

std::string CharSet::decode(const std::vector<int>& labels) const {
  std::u32string out;
  for (int l : labels)
    if (l >= 0 && static_cast<std::size_t>(l) < chars_.size()) out.push_back(chars_[l]);
  return utf8::encode(out);
}

}  // namespace hwanno
