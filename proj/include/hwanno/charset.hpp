#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hwanno {

// Ordered recognition alphabet. Class index i < size() is chars()[i]; the CTC
// blank takes the last class, size().
class CharSet {
 public:
  static constexpr std::size_t kStandardSize = 79;

  // Any non-empty set of distinct characters; small alphabets back toy models.
  explicit CharSet(std::u32string chars);

  // The 79-character IAM word alphabet (space, punctuation, digits, letters).
  static CharSet iam();
  // One character per line, exactly 79 lines.
  static CharSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return chars_.size(); }
  std::size_t num_classes() const { return chars_.size() + 1; }
  int blank_index() const { return static_cast<int>(chars_.size()); }
  const std::u32string& chars() const { return chars_; }

  std::optional<int> index_of(char32_t c) const;
  // Throws InvalidArgument naming the first character outside the alphabet.
  std::vector<int> encode(std::string_view text) const;
  std::string decode(const std::vector<int>& labels) const;

  friend bool operator==(const CharSet& a, const CharSet& b) { return a.chars_ == b.chars_; }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, int> index_;
};

}  // namespace hwanno
