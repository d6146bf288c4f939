#include "engage/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace engage {

using nlohmann::json;

std::string category_name(Category c) {
  switch (c) {
    case Category::OtherConspiracies: return "other_conspiracies";
    case Category::QAnon: return "qanon";
    case Category::Baseline: return "baseline";
  }
  return "baseline";
}

std::optional<Category> parse_category(std::string_view name) {
  if (name == "other_conspiracies") return Category::OtherConspiracies;
  if (name == "qanon") return Category::QAnon;
  if (name == "baseline") return Category::Baseline;
  return std::nullopt;
}

void Corpus::rebuild_index() {
  video_index.clear();
  channel_index.clear();
  comments_by_video.clear();
  for (std::size_t i = 0; i < videos.size(); ++i) video_index[videos[i].video_id] = i;
  for (std::size_t i = 0; i < channels.size(); ++i) channel_index[channels[i].channel_id] = i;

  // Route comments referencing unknown videos to the orphan list.
  std::vector<Comment> kept;
  kept.reserve(comments.size());
  for (auto& c : comments) {
    if (video_index.count(c.video_id)) {
      kept.push_back(std::move(c));
    } else {
      orphans.push_back(std::move(c));
    }
  }
  comments = std::move(kept);

  // Flatten reply-to-reply nesting to the top-level ancestor.
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < comments.size(); ++i) by_id[comments[i].comment_id] = i;
  for (auto& c : comments) {
    if (!c.parent_id) continue;
    std::set<std::string> seen;
    std::string cur = *c.parent_id;
    while (true) {
      if (!seen.insert(cur).second) break;  // cycle guard
      auto it = by_id.find(cur);
      if (it == by_id.end()) break;
      const Comment& parent = comments[it->second];
      if (!parent.parent_id) break;
      cur = *parent.parent_id;
    }
    c.parent_id = cur;
  }

  for (std::size_t i = 0; i < comments.size(); ++i) {
    comments_by_video[comments[i].video_id].push_back(i);
  }
}

const Video* Corpus::find_video(const std::string& video_id) const {
  auto it = video_index.find(video_id);
  return it == video_index.end() ? nullptr : &videos[it->second];
}

const Channel* Corpus::find_channel(const std::string& channel_id) const {
  auto it = channel_index.find(channel_id);
  return it == channel_index.end() ? nullptr : &channels[it->second];
}

bool Corpus::same_content(const Corpus& other) const {
  auto sorted_videos = [](const Corpus& c) {
    auto v = c.videos;
    std::sort(v.begin(), v.end(),
              [](const Video& a, const Video& b) { return a.video_id < b.video_id; });
    return v;
  };
  auto sorted_comments = [](const Corpus& c) {
    auto v = c.comments;
    std::sort(v.begin(), v.end(),
              [](const Comment& a, const Comment& b) { return a.comment_id < b.comment_id; });
    return v;
  };
  auto sorted_channels = [](const Corpus& c) {
    auto v = c.channels;
    std::sort(v.begin(), v.end(),
              [](const Channel& a, const Channel& b) { return a.channel_id < b.channel_id; });
    return v;
  };
  return sorted_videos(*this) == sorted_videos(other) &&
         sorted_comments(*this) == sorted_comments(other) &&
         sorted_channels(*this) == sorted_channels(other);
}

namespace {

Comment comment_from_json(const json& j) {
  Comment c;
  c.comment_id = j.at("comment_id").get<std::string>();
  c.video_id = j.at("video_id").get<std::string>();
  if (j.contains("parent_id") && !j["parent_id"].is_null())
    c.parent_id = j["parent_id"].get<std::string>();
  c.author_id = j.at("author_id").get<std::string>();
  c.author_display = j.value("author_display", std::string{});
  c.text = j.value("text", std::string{});
  c.published_at = j.value("published_at", std::int64_t{0});
  c.like_count = j.value("like_count", std::int64_t{0});
  if (c.like_count < 0) throw std::runtime_error("negative like_count");
  return c;
}

Video video_from_json(const json& j, Category default_category) {
  Video v;
  v.video_id = j.at("video_id").get<std::string>();
  v.channel_id = j.value("channel_id", std::string{});
  v.title = j.value("title", std::string{});
  v.published_at = j.value("published_at", std::int64_t{0});
  v.view_count = j.value("view_count", std::int64_t{0});
  v.like_count = j.value("like_count", std::int64_t{0});
  v.reported_comment_count = j.value("reported_comment_count", std::int64_t{0});
  if (v.view_count < 0 || v.like_count < 0 || v.reported_comment_count < 0)
    throw std::runtime_error("negative counter");
  v.category = default_category;
  if (j.contains("category")) {
    auto cat = parse_category(j["category"].get<std::string>());
    if (!cat) throw std::runtime_error("unknown category");
    v.category = *cat;
  }
  if (j.contains("transcript") && !j["transcript"].is_null())
    v.transcript = j["transcript"].get<std::string>();
  return v;
}

json comment_to_json(const Comment& c) {
  json j;
  j["kind"] = "comment";
  j["comment_id"] = c.comment_id;
  j["video_id"] = c.video_id;
  if (c.parent_id) j["parent_id"] = *c.parent_id;
  j["author_id"] = c.author_id;
  j["author_display"] = c.author_display;
  j["text"] = c.text;
  j["published_at"] = c.published_at;
  j["like_count"] = c.like_count;
  return j;
}

json video_to_json(const Video& v) {
  json j;
  j["kind"] = "video";
  j["video_id"] = v.video_id;
  j["channel_id"] = v.channel_id;
  j["title"] = v.title;
  j["published_at"] = v.published_at;
  j["view_count"] = v.view_count;
  j["like_count"] = v.like_count;
  j["reported_comment_count"] = v.reported_comment_count;
  j["category"] = category_name(v.category);
  if (v.transcript) j["transcript"] = *v.transcript;
  return j;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, Category default_category,
                   double malformed_threshold, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());

  Corpus corpus;
  corpus.snapshot_label = path.stem().string();
  LoadStats local;
  std::string line;
  std::size_t line_no = 0;
  std::string first_bad;
  std::size_t first_bad_line = 0;
  std::set<std::string> comment_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++local.records;
    try {
      json j = json::parse(line);
      auto kind = j.at("kind").get<std::string>();
      if (kind == "video") {
        corpus.videos.push_back(video_from_json(j, default_category));
      } else if (kind == "comment") {
        Comment c = comment_from_json(j);
        if (!comment_ids.insert(c.comment_id).second)
          throw std::runtime_error("duplicate comment_id " + c.comment_id);
        corpus.comments.push_back(std::move(c));
      } else if (kind == "channel") {
        Channel ch;
        ch.channel_id = j.at("channel_id").get<std::string>();
        ch.owner_author_id = j.at("owner_author_id").get<std::string>();
        corpus.channels.push_back(std::move(ch));
      } else {
        throw std::runtime_error("unknown record kind: " + kind);
      }
    } catch (const std::exception& e) {
      ++local.malformed;
      if (first_bad.empty()) {
        first_bad = e.what();
        first_bad_line = line_no;
      }
    }
  }
  if (local.records > 0 &&
      static_cast<double>(local.malformed) / static_cast<double>(local.records) >
          malformed_threshold) {
    throw std::runtime_error("malformed-record fraction above threshold; first error at line " +
                             std::to_string(first_bad_line) + ": " + first_bad);
  }
  corpus.rebuild_index();
  local.orphaned = corpus.orphans.size();
  if (stats) *stats = local;
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  for (const auto& v : corpus.videos) out << video_to_json(v).dump() << '\n';
  for (const auto& ch : corpus.channels) {
    json j;
    j["kind"] = "channel";
    j["channel_id"] = ch.channel_id;
    j["owner_author_id"] = ch.owner_author_id;
    out << j.dump() << '\n';
  }
  for (const auto& c : corpus.comments) out << comment_to_json(c).dump() << '\n';
  for (const auto& c : corpus.orphans) out << comment_to_json(c).dump() << '\n';
}

Corpus exclude_creator_comments(const Corpus& corpus, ExclusionStats* stats) {
  Corpus out = corpus;
  ExclusionStats local;
  std::vector<Comment> kept;
  kept.reserve(out.comments.size());
  for (auto& c : out.comments) {
    const Video* v = corpus.find_video(c.video_id);
    const Channel* ch = v ? corpus.find_channel(v->channel_id) : nullptr;
    if (!ch) {
      ++local.retained_unresolved;
      kept.push_back(std::move(c));
      continue;
    }
    if (c.author_id == ch->owner_author_id) {
      ++local.removed;
    } else {
      kept.push_back(std::move(c));
    }
  }
  out.comments = std::move(kept);
  out.rebuild_index();
  if (stats) *stats = local;
  return out;
}

DiscrepancyReport discrepancy_report(const Corpus& corpus) {
  DiscrepancyReport rep;
  std::int64_t sum_reported = 0, sum_missing = 0;
  std::map<int, std::size_t> hist;
  for (const auto& v : corpus.videos) {
    DiscrepancyReport::Row row;
    row.video_id = v.video_id;
    row.reported = v.reported_comment_count;
    auto it = corpus.comments_by_video.find(v.video_id);
    row.available = it == corpus.comments_by_video.end()
                        ? 0
                        : static_cast<std::int64_t>(it->second.size());
    row.missing = std::max<std::int64_t>(row.reported - row.available, 0);
    row.over_reported = row.available > row.reported;
    sum_reported += row.reported;
    sum_missing += row.missing;
    int bucket = -1;
    if (row.missing > 0) {
      bucket = 0;
      while ((std::int64_t{1} << (bucket + 1)) <= row.missing) ++bucket;
    }
    ++hist[bucket];
    rep.rows.push_back(std::move(row));
  }
  rep.missing_rate = sum_reported > 0
                         ? static_cast<double>(sum_missing) / static_cast<double>(sum_reported)
                         : 0.0;
  rep.log_histogram.assign(hist.begin(), hist.end());
  return rep;
}

SnapshotDiff SnapshotDiff::negated() const {
  SnapshotDiff out = *this;
  for (auto& r : out.rows) {
    std::swap(r.videos_added, r.videos_removed);
    r.comment_delta = -r.comment_delta;
  }
  return out;
}

bool SnapshotDiff::is_zero() const {
  for (const auto& r : rows) {
    if (r.videos_added || r.videos_removed || r.comment_delta != 0) return false;
  }
  return true;
}

SnapshotDiff diff_snapshots(const Corpus& a, const Corpus& b) {
  auto available = [](const Corpus& c, const std::string& vid) -> std::int64_t {
    auto it = c.comments_by_video.find(vid);
    return it == c.comments_by_video.end() ? 0 : static_cast<std::int64_t>(it->second.size());
  };
  std::map<Category, SnapshotDiff::Row> rows;
  auto row_for = [&](Category cat) -> SnapshotDiff::Row& {
    auto [it, inserted] = rows.try_emplace(cat);
    if (inserted) it->second.category = cat;
    return it->second;
  };
  for (const auto& v : a.videos) {
    auto& row = row_for(v.category);
    if (b.find_video(v.video_id)) {
      ++row.videos_persisting;
      row.comment_delta += available(b, v.video_id) - available(a, v.video_id);
    } else {
      ++row.videos_removed;
    }
  }
  for (const auto& v : b.videos) {
    if (!a.find_video(v.video_id)) ++row_for(v.category).videos_added;
  }
  SnapshotDiff diff;
  for (auto& [cat, row] : rows) diff.rows.push_back(row);
  return diff;
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  auto hash_str = [](const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  };
  std::uint64_t acc = 0;
  for (const auto& v : corpus.videos) {
    acc ^= hash_str(v.video_id + "|" + v.channel_id + "|" + std::to_string(v.published_at) + "|" +
                    std::to_string(v.view_count) + "|" + std::to_string(v.like_count) + "|" +
                    std::to_string(v.reported_comment_count) + "|" + category_name(v.category));
  }
  for (const auto& ch : corpus.channels) acc ^= hash_str(ch.channel_id + "|" + ch.owner_author_id);
  for (const auto& c : corpus.comments) {
    acc ^= hash_str(c.comment_id + "|" + c.video_id + "|" + c.author_id + "|" +
                    std::to_string(c.published_at) + "|" + c.text);
  }
  return acc;
}

}  // namespace engage
