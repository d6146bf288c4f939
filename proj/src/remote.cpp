#include "engage/remote.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

namespace engage {

namespace {
constexpr std::size_t kMaxTransientRetries = 5;
constexpr double kMaxWaitSeconds = 30.0;
}  // namespace

FetchResult fetch_remote(RemoteClient& client, const std::vector<std::string>& video_ids,
                         std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  FetchResult result;
  for (std::size_t i = 0; i < video_ids.size(); i += batch_size) {
    std::vector<std::string> batch(video_ids.begin() + i,
                                   video_ids.begin() + std::min(i + batch_size, video_ids.size()));
    auto videos = client.list_videos(batch);
    for (auto& v : videos) result.corpus.videos.push_back(std::move(v));
  }

  std::vector<std::string> channel_ids;
  for (const auto& v : result.corpus.videos) {
    if (std::find(channel_ids.begin(), channel_ids.end(), v.channel_id) == channel_ids.end())
      channel_ids.push_back(v.channel_id);
  }
  for (std::size_t i = 0; i < channel_ids.size(); i += batch_size) {
    std::vector<std::string> batch(
        channel_ids.begin() + i,
        channel_ids.begin() + std::min(i + batch_size, channel_ids.size()));
    auto channels = client.list_channels(batch);
    for (auto& ch : channels) result.corpus.channels.push_back(std::move(ch));
  }

  for (const auto& vid : video_ids) {
    bool known = std::any_of(result.corpus.videos.begin(), result.corpus.videos.end(),
                             [&](const Video& v) { return v.video_id == vid; });
    if (!known) {
      result.unavailable.push_back(vid);
      continue;
    }
    std::string token;
    std::size_t transient_failures = 0;
    bool failed = false;
    while (true) {
      auto resp = client.list_comments(vid, token);
      if (auto* err = std::get_if<RemoteError>(&resp)) {
        switch (err->kind) {
          case RemoteError::Kind::RateLimited: {
            ++result.rate_limit_waits;
            double wait = std::clamp(err->retry_after_s, 0.0, kMaxWaitSeconds);
            if (wait > 0)
              std::this_thread::sleep_for(std::chrono::duration<double>(wait));
            continue;  // same page
          }
          case RemoteError::Kind::Transient:
            if (++transient_failures <= kMaxTransientRetries) continue;
            failed = true;
            break;
          case RemoteError::Kind::Removed:
            failed = true;
            break;
        }
        break;
      }
      auto& page = std::get<CommentPage>(resp);
      ++result.page_calls;
      transient_failures = 0;
      for (auto& c : page.comments) result.corpus.comments.push_back(std::move(c));
      if (page.next_token.empty()) break;
      token = page.next_token;
    }
    if (failed) {
      result.unavailable.push_back(vid);
      // drop partial comments of the failed video
      std::erase_if(result.corpus.comments,
                    [&](const Comment& c) { return c.video_id == vid; });
      std::erase_if(result.corpus.videos,
                    [&](const Video& v) { return v.video_id == vid; });
    }
  }
  result.corpus.rebuild_index();
  return result;
}

FixtureClient::FixtureClient(Corpus corpus, std::size_t page_size)
    : corpus_(std::move(corpus)), page_size_(page_size == 0 ? 1 : page_size) {
  corpus_.rebuild_index();
}

std::unique_ptr<FixtureClient> FixtureClient::from_dir(const std::filesystem::path& dir,
                                                       Category default_category,
                                                       std::size_t page_size) {
  auto corpus = load_corpus(dir / "corpus.jsonl", default_category);
  return std::make_unique<FixtureClient>(std::move(corpus), page_size);
}

std::vector<Video> FixtureClient::list_videos(const std::vector<std::string>& ids) {
  std::vector<Video> out;
  for (const auto& id : ids) {
    if (std::find(removed_.begin(), removed_.end(), id) != removed_.end()) continue;
    if (const Video* v = corpus_.find_video(id)) out.push_back(*v);
  }
  return out;
}

std::vector<Channel> FixtureClient::list_channels(const std::vector<std::string>& ids) {
  std::vector<Channel> out;
  for (const auto& id : ids) {
    if (const Channel* ch = corpus_.find_channel(id)) out.push_back(*ch);
  }
  return out;
}

std::variant<CommentPage, RemoteError> FixtureClient::list_comments(
    const std::string& video_id, const std::string& page_token) {
  if (std::find(removed_.begin(), removed_.end(), video_id) != removed_.end()) {
    return RemoteError{RemoteError::Kind::Removed, 0.0};
  }
  std::size_t page = page_token.empty() ? 0 : std::stoul(page_token);
  for (auto it = faults_.begin(); it != faults_.end(); ++it) {
    if (it->video_id == video_id && it->page_ordinal == page) {
      RemoteError err = it->error;
      faults_.erase(it);  // one-shot
      return err;
    }
  }
  CommentPage out;
  auto idx_it = corpus_.comments_by_video.find(video_id);
  if (idx_it != corpus_.comments_by_video.end()) {
    const auto& idx = idx_it->second;
    std::size_t begin = page * page_size_;
    std::size_t end = std::min(begin + page_size_, idx.size());
    for (std::size_t i = begin; i < end; ++i) out.comments.push_back(corpus_.comments[idx[i]]);
    if (end < idx.size()) out.next_token = std::to_string(page + 1);
  }
  return out;
}

}  // namespace engage
