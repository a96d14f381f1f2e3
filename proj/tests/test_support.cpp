#include <filesystem>
#include <random>

#include "doctest.h"
#include "hwanno/archive.hpp"
#include "hwanno/charset.hpp"
#include "hwanno/error.hpp"
#include "hwanno/image.hpp"
#include "hwanno/utf8.hpp"
#include "test_paths.hpp"

using namespace hwanno;
namespace fs = std::filesystem;

TEST_CASE("charset") {
  const auto cs = CharSet::iam();
  CHECK(cs.size() == 79);
  CHECK(cs.num_classes() == 80);
  CHECK(cs.blank_index() == 79);
  CHECK(cs.encode("Ab1") == std::vector<int>{*cs.index_of(U'A'), *cs.index_of(U'b'), *cs.index_of(U'1')});
  CHECK(cs.decode(cs.encode("it's 42.")) == "it's 42.");
  CHECK_THROWS_AS(cs.encode("~"), Error);
  CHECK_THROWS_AS(CharSet(U"aba"), Error);
  CHECK_THROWS_AS(CharSet(U""), Error);

  const auto shipped = CharSet::load(fs::path(HWANNO_SOURCE_DIR) / "data" / "charset.txt");
  CHECK(shipped == cs);

  const auto dir = fs::temp_directory_path() / "hwanno_charset_test";
  fs::create_directories(dir);
  cs.save(dir / "c.txt");
  CHECK(CharSet::load(dir / "c.txt") == cs);
  CharSet(U"ab").save(dir / "short.txt");
  try {
    CharSet::load(dir / "short.txt");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  fs::remove_all(dir);
}

TEST_CASE("utf8") {
  CHECK(utf8::decode("aé€😀") == U"aé€😀");
  CHECK(utf8::encode(U"aé€😀") == "aé€😀");
  CHECK(utf8::to_lower(U'É') == U'é');
  CHECK(utf8::to_upper(U'q') == U'Q');
  CHECK(utf8::is_alpha(U'ü'));
  CHECK_FALSE(utf8::is_alpha(U'7'));
  CHECK(utf8::decode("a\xff") == U"a\uFFFD");
  CHECK(utf8::decode("\xe2\x82") == U"\uFFFD\uFFFD");
}

TEST_CASE("images") {
  CHECK(luma(255, 255, 255) == 255);
  CHECK(luma(0, 0, 0) == 0);
  CHECK(luma(255, 0, 0) == 76);

  const auto page = golden::page_image();
  const auto png = encode_png(page);
  CHECK(decode_image(png) == page);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4, 5};
  try {
    decode_image(junk);
    FAIL("expected BadImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadImage);
  }

  const auto c = crop(page, -5, 110, 20, 30);
  CHECK(c.width == 15);
  CHECK(c.height == 10);
  CHECK(c.at(0, 0) == page.at(0, 110));
  CHECK_THROWS_AS(crop(page, 300, 0, 5, 5), Error);
}

TEST_CASE("tensor archive") {
  TensorArchive a;
  a.add("score", Tensor({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}));
  a.add("w", Tensor({1}, std::vector<float>{-0.5f}));
  const auto bytes = a.serialize();
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SGM1");
  const auto b = TensorArchive::parse(bytes);
  REQUIRE(b.entries().size() == 2);
  CHECK(b.get("score") == a.get("score"));
  CHECK(b.find("missing") == nullptr);
  CHECK_THROWS_AS(b.get("missing"), Error);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(TensorArchive::parse(truncated), Error);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(TensorArchive::parse(bad_magic), Error);
  CHECK_THROWS_AS(a.add("w", Tensor({1})), Error);

  // A hand-made file that repeats a name.
  TensorArchive one;
  one.add("w", Tensor({1}, std::vector<float>{2}));
  auto twice = one.serialize();
  twice.insert(twice.end(), twice.begin() + 4, twice.end());
  try {
    TensorArchive::parse(twice);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
}
