#pragma once

// Shared synthetic-data builders for the test binaries.

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "engage/corpus.hpp"

namespace fixtures {

using namespace engage;

inline Video make_video(std::string id, Category cat = Category::Baseline,
                        std::int64_t reported = 0, std::string channel = "ch1") {
  Video v;
  v.video_id = std::move(id);
  v.channel_id = std::move(channel);
  v.title = "video " + v.video_id;
  v.published_at = 1600000000;
  v.reported_comment_count = reported;
  v.category = cat;
  return v;
}

inline Comment make_comment(std::string id, std::string video, std::string author = "u1",
                            std::string text = "hello world",
                            std::int64_t published_at = 1600000100) {
  Comment c;
  c.comment_id = std::move(id);
  c.video_id = std::move(video);
  c.author_id = author;
  c.author_display = "user " + author;
  c.text = std::move(text);
  c.published_at = published_at;
  return c;
}

inline Comment make_reply(std::string id, std::string video, std::string parent,
                          std::string author = "u2", std::string text = "a reply",
                          std::int64_t published_at = 1600000200) {
  Comment c = make_comment(std::move(id), std::move(video), std::move(author), std::move(text),
                           published_at);
  c.parent_id = std::move(parent);
  return c;
}

inline Corpus small_corpus() {
  Corpus c;
  c.videos = {make_video("v1", Category::QAnon, 3), make_video("v2", Category::Baseline, 1)};
  c.channels = {{"ch1", "creator1"}};
  c.comments = {make_comment("c1", "v1", "u1", "first comment"),
                make_comment("c2", "v1", "u2", "second comment"),
                make_reply("c3", "v1", "c1", "u3", "reply to first"),
                make_comment("c4", "v2", "u1", "other video comment")};
  c.rebuild_index();
  return c;
}

// Unique scratch directory under the system temp root, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    char buf[32];
    std::snprintf(buf, sizeof buf, "engage-%016llx",
                  static_cast<unsigned long long>(rng()));
    path = std::filesystem::temp_directory_path() / buf;
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

// Deterministic word soup for bulk corpora.
inline std::string random_sentence(std::mt19937_64& rng, std::size_t words) {
  static const std::vector<std::string> vocab = {
      "people",  "video",   "think",  "really", "world",  "truth",   "media",  "never",
      "always",  "believe", "story",  "power",  "money",  "secret",  "agenda", "facts",
      "years",   "today",   "watch",  "share",  "question", "answer", "system", "control",
      "nothing", "everyone", "happen", "public", "report", "record"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (!out.empty()) out += ' ';
    out += vocab[pick(rng)];
  }
  return out;
}

}  // namespace fixtures
