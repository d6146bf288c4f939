#include "engage/text.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace engage::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

namespace {

bool is_space_at(std::string_view s, std::size_t i, std::size_t& len) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (std::isspace(c)) {
    len = 1;
    return true;
  }
  // U+00A0 no-break space
  if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) {
    len = 2;
    return true;
  }
  len = 1;
  return false;
}

bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

std::string strip_punct(std::string_view tok) {
  std::size_t b = 0, e = tok.size();
  while (b < e && is_ascii_punct(tok[b])) ++b;
  while (e > b && is_ascii_punct(tok[e - 1])) --e;
  // An all-punctuation token stays as-is ("!!!" carries signal downstream).
  if (b == e) return std::string(tok);
  return std::string(tok.substr(b, e - b));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = 1;
    if (is_space_at(s, i, len)) {
      i += len;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && !is_space_at(s, i, len)) ++i;
    std::string_view raw = s.substr(start, i - start);
    if (is_url_token(raw)) {
      out.emplace_back(raw);
    } else {
      std::string t = strip_punct(raw);
      if (!t.empty()) out.push_back(std::move(t));
    }
  }
  return out;
}

std::vector<std::string> tokenize_lower(std::string_view s) {
  auto toks = tokenize(s);
  for (auto& t : toks) t = to_lower(t);
  return toks;
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    if (i + len > s.size()) len = 1;
    i += len;
    ++n;
  }
  return n;
}

bool is_url_token(std::string_view tok) {
  auto lower = to_lower(tok);
  return lower.rfind("http://", 0) == 0 || lower.rfind("https://", 0) == 0 ||
         lower.rfind("www.", 0) == 0;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (!t.empty()) out.push_back(to_lower(t));
  }
  return out;
}

std::size_t ifind(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  if (needle.size() > haystack.size()) return std::string_view::npos;
  for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
    std::size_t j = 0;
    for (; j < needle.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
          std::tolower(static_cast<unsigned char>(needle[j])))
        break;
    }
    if (j == needle.size()) return i;
  }
  return std::string_view::npos;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace engage::text
