#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace engage {

enum class Category { OtherConspiracies, QAnon, Baseline };

std::string category_name(Category c);
std::optional<Category> parse_category(std::string_view name);

struct Comment {
  std::string comment_id;
  std::string video_id;
  std::optional<std::string> parent_id;  // absent => top-level
  std::string author_id;
  std::string author_display;
  std::string text;
  std::int64_t published_at = 0;  // UTC epoch seconds
  std::int64_t like_count = 0;

  bool operator==(const Comment&) const = default;
};

struct Video {
  std::string video_id;
  std::string channel_id;
  std::string title;
  std::int64_t published_at = 0;
  std::int64_t view_count = 0;
  std::int64_t like_count = 0;
  std::int64_t reported_comment_count = 0;
  Category category = Category::Baseline;
  std::optional<std::string> transcript;

  bool operator==(const Video&) const = default;
};

struct Channel {
  std::string channel_id;
  std::string owner_author_id;

  bool operator==(const Channel&) const = default;
};

struct Corpus {
  std::vector<Video> videos;
  std::vector<Comment> comments;
  std::vector<Channel> channels;
  std::vector<Comment> orphans;  // comments whose video_id is unknown
  std::string snapshot_label;

  std::unordered_map<std::string, std::size_t> video_index;
  std::unordered_map<std::string, std::size_t> channel_index;
  std::unordered_map<std::string, std::vector<std::size_t>> comments_by_video;

  void rebuild_index();
  const Video* find_video(const std::string& video_id) const;
  const Channel* find_channel(const std::string& channel_id) const;

  bool same_content(const Corpus& other) const;
};

struct LoadStats {
  std::size_t records = 0;
  std::size_t malformed = 0;
  std::size_t orphaned = 0;
};

// JSON-lines, one record per line, "kind" tag in {video, comment, channel}.
// Records missing a category field take default_category. Malformed records are
// tolerated up to malformed_threshold (fraction of total lines).
Corpus load_corpus(const std::filesystem::path& path, Category default_category,
                   double malformed_threshold = 0.01, LoadStats* stats = nullptr);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct ExclusionStats {
  std::size_t removed = 0;
  std::size_t retained_unresolved = 0;  // comments kept because the channel was unknown
};

Corpus exclude_creator_comments(const Corpus& corpus, ExclusionStats* stats = nullptr);

struct DiscrepancyReport {
  struct Row {
    std::string video_id;
    std::int64_t reported = 0;
    std::int64_t available = 0;
    std::int64_t missing = 0;  // max(reported - available, 0)
    bool over_reported = false;  // available > reported, platform inconsistency
  };
  std::vector<Row> rows;
  double missing_rate = 0.0;
  // log2-scale histogram of per-video missing counts: bucket k holds videos
  // with missing in [2^k, 2^(k+1)); bucket -1 holds missing == 0.
  std::vector<std::pair<int, std::size_t>> log_histogram;
};

DiscrepancyReport discrepancy_report(const Corpus& corpus);

struct SnapshotDiff {
  struct Row {
    Category category;
    std::size_t videos_added = 0;
    std::size_t videos_removed = 0;
    std::size_t videos_persisting = 0;
    std::int64_t comment_delta = 0;  // available comments, persisting videos only
  };
  std::vector<Row> rows;  // one per category present in either corpus

  SnapshotDiff negated() const;
  bool is_zero() const;
};

SnapshotDiff diff_snapshots(const Corpus& a, const Corpus& b);

// Order-independent content fingerprint over videos, channels and comments.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

}  // namespace engage
