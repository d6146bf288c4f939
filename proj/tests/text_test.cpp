#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "engage/text.hpp"
#include "fixtures.hpp"

using namespace engage;

TEST_CASE("to_lower handles ascii only") {
  CHECK(text::to_lower("HeLLo") == "hello");
  CHECK(text::to_lower("ÄBC") == text::to_lower("ÄBC"));  // multibyte untouched, stable
  CHECK(text::to_lower("MiXeD 123!") == "mixed 123!");
}

TEST_CASE("tokenize splits on whitespace and strips edge punctuation") {
  CHECK(text::tokenize("Hello, world!") == std::vector<std::string>{"Hello", "world"});
  CHECK(text::tokenize("  spaced\tout\nlines ") ==
        std::vector<std::string>{"spaced", "out", "lines"});
  CHECK(text::tokenize("") == std::vector<std::string>{});
  // interior punctuation survives
  CHECK(text::tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
}

TEST_CASE("tokenize keeps URL tokens whole") {
  auto toks = text::tokenize("see https://example.com/x?a=1. now");
  REQUIRE(toks.size() == 3);
  CHECK(toks[1] == "https://example.com/x?a=1.");
  CHECK(text::is_url_token(toks[1]));
  CHECK(text::is_url_token("www.site.org"));
  CHECK_FALSE(text::is_url_token("hello"));
}

TEST_CASE("codepoint_count counts UTF-8 code points") {
  CHECK(text::codepoint_count("abc") == 3);
  CHECK(text::codepoint_count("") == 0);
  CHECK(text::codepoint_count("\xF0\x9F\x91\x8D") == 1);  // single emoji
  CHECK(text::codepoint_count("a\xC3\xA9") == 2);         // 'a' + e-acute
}

TEST_CASE("fnv1a matches the published reference values") {
  // Oracle: well-known FNV-1a 64-bit test vectors.
  CHECK(text::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(text::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(text::fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("load_lexicon skips comments and blanks, lowercases entries") {
  fixtures::TempDir tmp;
  {
    std::ofstream out(tmp / "lex.txt");
    out << "# header comment\nAlpha\n\nBETA\n  gamma  \n";
  }
  auto lex = text::load_lexicon(tmp / "lex.txt");
  CHECK(lex == std::vector<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("ifind is case-insensitive") {
  CHECK(text::ifind("Hello World", "world") == 6);
  CHECK(text::ifind("abc", "zz") == std::string_view::npos);
  CHECK(text::ifind("DISAGREE", "agree") == 3);
}

TEST_CASE("trim strips surrounding whitespace") {
  CHECK(text::trim("  x  ") == "x");
  CHECK(text::trim("\t\n") == "");
  CHECK(text::trim("none") == "none");
}
