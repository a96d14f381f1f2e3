#include "hwanno/lexicon.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "hwanno/error.hpp"
#include "hwanno/utf8.hpp"

namespace hwanno::lexicon {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

CerReport cer_report(const std::vector<EvalPair>& pairs) {
  CerReport r;
  r.pairs = pairs.size();
  for (const auto& p : pairs) {
    const auto gt = utf8::decode(p.ground_truth);
    if (gt.empty()) ++r.empty_ground_truths;
    r.reference_chars += gt.size();
    r.edits += levenshtein(gt, utf8::decode(p.recognized));
  }
  if (r.reference_chars == 0)
    throw Error(ErrorCode::EmptyCorpus, "ground truth contains no characters");
  r.value = static_cast<double>(r.edits) / static_cast<double>(r.reference_chars);
  return r;
}

double cer(const std::vector<EvalPair>& pairs) { return cer_report(pairs).value; }

std::string format_report(const CerReport& report) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "metric=cer value=%.4f pairs=%zu", report.value, report.pairs);
  return buf;
}

std::u32string Dictionary::fold(std::u32string_view word) const {
  std::u32string out(word);
  if (!case_sensitive_)
    for (auto& c : out) c = utf8::to_lower(c);
  return out;
}

void Dictionary::add_word(std::string_view word, std::uint64_t frequency) {
  if (word.empty()) throw Error(ErrorCode::EmptyWord, "cannot add an empty word");
  if (frequency == 0) frequency = 1;
  const auto key = fold(utf8::decode(word));
  entries_[key] += frequency;
  for (char32_t c : key) {
    auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), c);
    if (it == alphabet_.end() || *it != c) alphabet_.insert(it, c);
  }
}

bool Dictionary::contains(std::string_view word) const {
  return entries_.count(fold(utf8::decode(word))) > 0;
}

std::uint64_t Dictionary::frequency(std::string_view word) const {
  auto it = entries_.find(fold(utf8::decode(word)));
  return it == entries_.end() ? 0 : it->second;
}

Dictionary Dictionary::load(const std::filesystem::path& path, bool case_sensitive) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open dictionary " + path.string());
  Dictionary dict(case_sensitive);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string word;
    std::uint64_t count = 1;
    fields >> word;
    if (word.empty()) continue;
    if (!(fields >> count) && !fields.eof())
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(lineno) + ": bad frequency");
    dict.add_word(word, count);
  }
  return dict;
}

void Dictionary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write dictionary " + path.string());
  for (const auto& [word, count] : entries_) out << utf8::encode(word) << ' ' << count << '\n';
}

namespace {

template <typename Visit>
void for_each_edit(const std::u32string& w, const std::vector<char32_t>& alphabet, Visit&& visit) {
  const std::size_t n = w.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::u32string d = w;
    d.erase(i, 1);
    visit(d);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (w[i] == w[i + 1]) continue;
    std::u32string t = w;
    std::swap(t[i], t[i + 1]);
    visit(t);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (char32_t c : alphabet) {
      if (c == w[i]) continue;
      std::u32string r = w;
      r[i] = c;
      visit(r);
    }
  }
  for (std::size_t i = 0; i <= n; ++i) {
    for (char32_t c : alphabet) {
      std::u32string s = w;
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(i), c);
      visit(s);
    }
  }
}

struct Best {
  std::optional<std::u32string> word;
  std::uint64_t freq = 0;

  void offer(const std::u32string& cand, std::uint64_t f) {
    if (!word || f > freq || (f == freq && cand < *word)) {
      word = cand;
      freq = f;
    }
  }
};

// Re-applies the case shape of the input: all caps stays all caps, an
// initial capital stays capitalised.
std::u32string apply_case(const std::u32string& original, std::u32string corrected) {
  std::size_t letters = 0, upper = 0;
  for (char32_t c : original) {
    if (!utf8::is_alpha(c)) continue;
    ++letters;
    if (utf8::to_lower(c) != c) ++upper;
  }
  if (letters > 1 && upper == letters) {
    for (auto& c : corrected) c = utf8::to_upper(c);
    return corrected;
  }
  if (!original.empty() && !corrected.empty() && utf8::to_lower(original[0]) != original[0])
    corrected[0] = utf8::to_upper(corrected[0]);
  return corrected;
}

}  // namespace

std::string correct(std::string_view word, const Dictionary& dict) {
  const auto original = utf8::decode(word);
  if (dict.empty() || original.empty()) return std::string(word);
  if (std::none_of(original.begin(), original.end(), utf8::is_alpha)) return std::string(word);

  const auto key = dict.fold(original);
  const auto& entries = dict.entries();
  if (entries.count(key)) return std::string(word);

  Best best;
  auto consider = [&](const std::u32string& cand) {
    auto it = entries.find(cand);
    if (it != entries.end()) best.offer(cand, it->second);
  };
  for_each_edit(key, dict.alphabet(), consider);
  if (!best.word) {
    for_each_edit(key, dict.alphabet(), [&](const std::u32string& e1) {
      for_each_edit(e1, dict.alphabet(), consider);
    });
  }
  if (!best.word) return std::string(word);
  if (dict.case_sensitive()) return utf8::encode(*best.word);
  return utf8::encode(apply_case(original, *best.word));
}

Dictionary add_word(Dictionary dict, std::string_view word, std::uint64_t frequency) {
  dict.add_word(word, frequency);
  return dict;
}

}  // namespace hwanno::lexicon
