#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hwanno::lexicon {

// Unit-cost edit distance over Unicode scalar values of UTF-8 input.
std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

struct EvalPair {
  std::string ground_truth;
  std::string recognized;
};

struct CerReport {
  double value = 0;
  std::size_t pairs = 0;
  std::size_t edits = 0;
  std::size_t reference_chars = 0;
  std::size_t empty_ground_truths = 0;
};

// Corpus character error rate: total edits over total ground-truth length.
// Throws EmptyCorpus when the ground truth has no characters at all.
CerReport cer_report(const std::vector<EvalPair>& pairs);
double cer(const std::vector<EvalPair>& pairs);
// "metric=cer value=0.1000 pairs=3"
std::string format_report(const CerReport& report);

class Dictionary {
 public:
  explicit Dictionary(bool case_sensitive = false) : case_sensitive_(case_sensitive) {}

  // Lines of "word count"; a missing count means 1. Blank lines and lines
  // starting with '#' are skipped.
  static Dictionary load(const std::filesystem::path& path, bool case_sensitive = false);
  void save(const std::filesystem::path& path) const;

  // Inserts the word or raises its count. Throws EmptyWord.
  void add_word(std::string_view word, std::uint64_t frequency = 1);

  bool contains(std::string_view word) const;
  std::uint64_t frequency(std::string_view word) const;  // 0 when absent
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool case_sensitive() const { return case_sensitive_; }
  const std::map<std::u32string, std::uint64_t>& entries() const { return entries_; }
  const std::vector<char32_t>& alphabet() const { return alphabet_; }

  std::u32string fold(std::u32string_view word) const;

 private:
  bool case_sensitive_;
  std::map<std::u32string, std::uint64_t> entries_;
  std::vector<char32_t> alphabet_;  // sorted, distinct
};

// Dictionary spell correction. Words already known, words without letters and
// words with no candidate within two edits are returned unchanged.
std::string correct(std::string_view word, const Dictionary& dict);

Dictionary add_word(Dictionary dict, std::string_view word, std::uint64_t frequency = 1);

}  // namespace hwanno::lexicon
