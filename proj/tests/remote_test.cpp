#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "engage/remote.hpp"
#include "fixtures.hpp"

using namespace engage;
using fixtures::make_comment;
using fixtures::make_video;

namespace {

Corpus three_video_corpus() {
  Corpus c;
  for (int v = 1; v <= 3; ++v) {
    std::string vid = "v" + std::to_string(v);
    c.videos.push_back(make_video(vid, Category::Baseline, 4));
    for (int i = 0; i < 4; ++i) {
      c.comments.push_back(
          make_comment(vid + "_c" + std::to_string(i), vid, "u" + std::to_string(i)));
    }
  }
  c.channels = {{"ch1", "creator"}};
  c.rebuild_index();
  return c;
}

std::vector<std::string> ids(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& v : c.videos) out.push_back(v.video_id);
  return out;
}

}  // namespace

TEST_CASE("fixture fetch: 3 videos x 2 pages = 6 page calls, everything present") {
  Corpus source = three_video_corpus();
  FixtureClient client{source, 2};
  FetchResult r = fetch_remote(client, ids(source), 10);
  CHECK(r.page_calls == 6);
  CHECK(r.unavailable.empty());
  CHECK(r.corpus.same_content(source));
}

TEST_CASE("rate-limit injection leaves the final corpus identical") {
  Corpus source = three_video_corpus();
  FixtureClient plain{source, 2};
  FetchResult baseline = fetch_remote(plain, ids(source), 10);

  FixtureClient faulty{source, 2};
  faulty.inject({"v2", 1, {RemoteError::Kind::RateLimited, 0.0}});
  FetchResult r = fetch_remote(faulty, ids(source), 10);
  CHECK(r.rate_limit_waits == 1);
  CHECK(r.corpus.same_content(baseline.corpus));
}

TEST_CASE("removed video lands on the unavailable list") {
  Corpus source = three_video_corpus();
  FixtureClient client{source, 2};
  client.mark_removed("v3");
  FetchResult r = fetch_remote(client, ids(source), 10);
  CHECK(r.unavailable == std::vector<std::string>{"v3"});
  CHECK(r.corpus.find_video("v3") == nullptr);
  for (const auto& c : r.corpus.comments) CHECK(c.video_id != "v3");
}

TEST_CASE("transient errors retry, but only up to the bound") {
  Corpus source = three_video_corpus();
  SUBCASE("a few transients recover") {
    FixtureClient client{source, 2};
    for (std::size_t i = 0; i < 3; ++i)
      client.inject({"v1", 0, {RemoteError::Kind::Transient, 0.0}});
    FetchResult r = fetch_remote(client, ids(source), 10);
    CHECK(r.unavailable.empty());
    CHECK(r.corpus.same_content(source));
  }
  SUBCASE("persistent transients mark the video unavailable") {
    FixtureClient client{source, 2};
    for (std::size_t i = 0; i < 20; ++i)
      client.inject({"v1", 1, {RemoteError::Kind::Transient, 0.0}});
    FetchResult r = fetch_remote(client, ids(source), 10);
    CHECK(r.unavailable == std::vector<std::string>{"v1"});
    // partial pages for the failed video are dropped
    for (const auto& c : r.corpus.comments) CHECK(c.video_id != "v1");
  }
}

TEST_CASE("property: random rate-limit interleavings equal the uninterrupted fetch") {
  Corpus source = three_video_corpus();
  FixtureClient plain{source, 2};
  Corpus baseline = fetch_remote(plain, ids(source), 10).corpus;

  std::mt19937_64 rng{1234};
  std::uniform_int_distribution<int> vid(1, 3), page(0, 1), count(1, 4);
  for (int trial = 0; trial < 25; ++trial) {
    FixtureClient client{source, 2};
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
      client.inject({"v" + std::to_string(vid(rng)), static_cast<std::size_t>(page(rng)),
                     {RemoteError::Kind::RateLimited, 0.0}});
    }
    FetchResult r = fetch_remote(client, ids(source), 10);
    CHECK(r.corpus.same_content(baseline));
  }
}

TEST_CASE("batching respects batch_size for metadata lookups") {
  Corpus source = three_video_corpus();
  FixtureClient client{source, 2};
  FetchResult r = fetch_remote(client, ids(source), 2);  // 3 ids, batches of 2
  CHECK(r.corpus.same_content(source));
}
