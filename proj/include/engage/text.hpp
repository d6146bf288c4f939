#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace engage::text {

// ASCII lowercase; leaves multibyte sequences untouched.
std::string to_lower(std::string_view s);

// Whitespace-delimited tokens with leading/trailing punctuation stripped.
// Handles ASCII whitespace plus U+00A0.
std::vector<std::string> tokenize(std::string_view s);

// Lowercased tokens, convenience for lexicon matching.
std::vector<std::string> tokenize_lower(std::string_view s);

// Number of UTF-8 code points (malformed bytes count as one each).
std::size_t codepoint_count(std::string_view s);

bool is_url_token(std::string_view tok);

// 64-bit FNV-1a; stable across platforms.
std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL);

// One entry per line, '#' starts a comment, blank lines skipped; entries lowercased.
std::vector<std::string> load_lexicon(const std::filesystem::path& path);

// Case-insensitive substring search; returns npos if absent.
std::size_t ifind(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view s);

}  // namespace engage::text
