#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "engage/corpus.hpp"

namespace engage {

struct RemoteError {
  enum class Kind { RateLimited, Removed, Transient };
  Kind kind = Kind::Transient;
  double retry_after_s = 0.0;  // meaningful for RateLimited
};

struct CommentPage {
  std::vector<Comment> comments;
  std::string next_token;  // empty => done
};

class RemoteClient {
 public:
  virtual ~RemoteClient() = default;
  virtual std::vector<Video> list_videos(const std::vector<std::string>& ids) = 0;
  virtual std::variant<CommentPage, RemoteError> list_comments(const std::string& video_id,
                                                               const std::string& page_token) = 0;
  virtual std::vector<Channel> list_channels(const std::vector<std::string>& ids) = 0;
};

struct FetchResult {
  Corpus corpus;
  std::vector<std::string> unavailable;  // videos with permanent errors
  std::size_t page_calls = 0;            // successful page fetches
  std::size_t rate_limit_waits = 0;
};

// Consumes all comment pages per video, batching video metadata lookups.
// Rate-limit responses wait the advised interval and retry the same page;
// transient errors retry up to a bounded count, then the video is marked
// unavailable. Removed videos go straight to the unavailable list.
FetchResult fetch_remote(RemoteClient& client, const std::vector<std::string>& video_ids,
                         std::size_t batch_size);

// Fault plan for the fixture client: fire error `kind` before the nth
// successful page fetch of `video_id` (0-based page ordinal).
struct InjectedFault {
  std::string video_id;
  std::size_t page_ordinal = 0;
  RemoteError error;
};

// Serves a pre-built corpus in fixed-size pages; used by tests and by the
// `--client fixture:<dir>` ingestion path (dir must hold corpus.jsonl).
class FixtureClient : public RemoteClient {
 public:
  FixtureClient(Corpus corpus, std::size_t page_size);
  static std::unique_ptr<FixtureClient> from_dir(const std::filesystem::path& dir,
                                                 Category default_category,
                                                 std::size_t page_size = 50);

  void inject(InjectedFault fault) { faults_.push_back(std::move(fault)); }
  void mark_removed(const std::string& video_id) { removed_.push_back(video_id); }

  std::vector<Video> list_videos(const std::vector<std::string>& ids) override;
  std::variant<CommentPage, RemoteError> list_comments(const std::string& video_id,
                                                       const std::string& page_token) override;
  std::vector<Channel> list_channels(const std::vector<std::string>& ids) override;

 private:
  Corpus corpus_;
  std::size_t page_size_;
  std::vector<InjectedFault> faults_;
  std::vector<std::string> removed_;
};

}  // namespace engage
