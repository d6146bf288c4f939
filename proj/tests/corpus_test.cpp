#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "engage/corpus.hpp"
#include "fixtures.hpp"

using namespace engage;
using fixtures::make_comment;
using fixtures::make_reply;
using fixtures::make_video;
using fixtures::TempDir;

namespace {

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
  std::ofstream out(p);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

TEST_CASE("load_corpus: empty file gives empty corpus") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl", {});
  Corpus c = load_corpus(tmp / "c.jsonl", Category::Baseline);
  CHECK(c.videos.empty());
  CHECK(c.comments.empty());
}

TEST_CASE("load_corpus: index maps video to its comments") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl",
              {R"({"kind":"video","video_id":"v1","channel_id":"ch1"})",
               R"({"kind":"comment","comment_id":"c1","video_id":"v1","author_id":"u1"})",
               R"({"kind":"comment","comment_id":"c2","video_id":"v1","author_id":"u2"})"});
  Corpus c = load_corpus(tmp / "c.jsonl", Category::Baseline);
  REQUIRE(c.videos.size() == 1);
  REQUIRE(c.comments.size() == 2);
  CHECK(c.comments_by_video.at("v1").size() == 2);
}

TEST_CASE("load_corpus: unknown video routes comment to orphans") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl",
              {R"({"kind":"comment","comment_id":"c1","video_id":"missing","author_id":"u1"})"});
  Corpus c = load_corpus(tmp / "c.jsonl", Category::Baseline);
  CHECK(c.comments.empty());
  CHECK(c.orphans.size() == 1);
  CHECK(c.orphans[0].comment_id == "c1");
}

TEST_CASE("load_corpus: malformed fraction above threshold names the first bad line") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl", {R"({"kind":"video","video_id":"v1"})", "not json at all",
                                "{also broken"});
  LoadStats stats;
  CHECK_THROWS_WITH_AS(load_corpus(tmp / "c.jsonl", Category::Baseline, 0.01, &stats),
                       doctest::Contains("line 2"), std::runtime_error);
  // generous threshold tolerates the same file
  Corpus c = load_corpus(tmp / "c.jsonl", Category::Baseline, 0.9, &stats);
  CHECK(c.videos.size() == 1);
  CHECK(stats.malformed == 2);
}

TEST_CASE("load_corpus: duplicate comment ids rejected") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl",
              {R"({"kind":"video","video_id":"v1"})",
               R"({"kind":"comment","comment_id":"c1","video_id":"v1","author_id":"u1"})",
               R"({"kind":"comment","comment_id":"c1","video_id":"v1","author_id":"u2"})"});
  CHECK_THROWS_AS(load_corpus(tmp / "c.jsonl", Category::Baseline), std::runtime_error);
}

TEST_CASE("load_corpus: default category applied to untagged videos") {
  TempDir tmp;
  write_lines(tmp / "c.jsonl", {R"({"kind":"video","video_id":"v1"})",
                                R"({"kind":"video","video_id":"v2","category":"qanon"})"});
  Corpus c = load_corpus(tmp / "c.jsonl", Category::OtherConspiracies);
  CHECK(c.videos[0].category == Category::OtherConspiracies);
  CHECK(c.videos[1].category == Category::QAnon);
}

TEST_CASE("reply nesting deeper than depth 2 is flattened to the top-level ancestor") {
  Corpus c;
  c.videos = {make_video("v1")};
  c.comments = {make_comment("top", "v1"), make_reply("r1", "v1", "top"),
                make_reply("r2", "v1", "r1")};  // reply to a reply
  c.rebuild_index();
  const Comment* r2 = nullptr;
  for (const auto& cm : c.comments)
    if (cm.comment_id == "r2") r2 = &cm;
  REQUIRE(r2 != nullptr);
  CHECK(*r2->parent_id == "top");
}

TEST_CASE("round-trip: write then reload is deeply equal") {
  TempDir tmp;
  Corpus c = fixtures::small_corpus();
  write_corpus(c, tmp / "out.jsonl");
  Corpus back = load_corpus(tmp / "out.jsonl", Category::Baseline);
  CHECK(c.same_content(back));
  // and a second write is byte-identical (serialization determinism)
  write_corpus(back, tmp / "out2.jsonl");
  std::ifstream f1(tmp / "out.jsonl"), f2(tmp / "out2.jsonl");
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("exclude_creator_comments removes owner comments only") {
  Corpus c;
  c.videos = {make_video("v1")};
  c.channels = {{"ch1", "creator"}};
  c.comments = {make_comment("c1", "v1", "creator"), make_comment("c2", "v1", "creator"),
                make_comment("c3", "v1", "u1"), make_comment("c4", "v1", "u2"),
                make_comment("c5", "v1", "u3")};
  c.rebuild_index();
  ExclusionStats stats;
  Corpus cleaned = exclude_creator_comments(c, &stats);
  CHECK(cleaned.comments.size() == 3);
  CHECK(stats.removed == 2);

  SUBCASE("identity when no creator comments") {
    Corpus again = exclude_creator_comments(cleaned);
    CHECK(again.same_content(cleaned));
  }
  SUBCASE("idempotence") {
    CHECK(exclude_creator_comments(cleaned).same_content(exclude_creator_comments(
        exclude_creator_comments(cleaned))));
  }
}

TEST_CASE("creator reply removed while the user top-level survives") {
  Corpus c;
  c.videos = {make_video("v1")};
  c.channels = {{"ch1", "creator"}};
  c.comments = {make_comment("top", "v1", "u1"), make_reply("r1", "v1", "top", "creator")};
  c.rebuild_index();
  Corpus cleaned = exclude_creator_comments(c);
  REQUIRE(cleaned.comments.size() == 1);
  CHECK(cleaned.comments[0].comment_id == "top");
}

TEST_CASE("unresolvable channel retains comments and counts them") {
  Corpus c;
  c.videos = {make_video("v1", Category::Baseline, 0, "ghost_channel")};
  c.comments = {make_comment("c1", "v1", "u1")};
  c.rebuild_index();
  ExclusionStats stats;
  Corpus cleaned = exclude_creator_comments(c, &stats);
  CHECK(cleaned.comments.size() == 1);
  CHECK(stats.retained_unresolved == 1);
}

TEST_CASE("discrepancy_report arithmetic") {
  SUBCASE("reported 10 available 7") {
    Corpus c;
    c.videos = {make_video("v1", Category::Baseline, 10)};
    for (int i = 0; i < 7; ++i)
      c.comments.push_back(make_comment("c" + std::to_string(i), "v1"));
    c.rebuild_index();
    DiscrepancyReport r = discrepancy_report(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].missing == 3);
    CHECK(r.missing_rate == doctest::Approx(0.3));
  }
  SUBCASE("all-zero corpus has rate 0") {
    Corpus c;
    c.videos = {make_video("v1", Category::Baseline, 0)};
    c.rebuild_index();
    CHECK(discrepancy_report(c).missing_rate == 0.0);
  }
  SUBCASE("aggregate rate over two videos") {
    Corpus c;
    c.videos = {make_video("v1", Category::Baseline, 10),
                make_video("v2", Category::Baseline, 10)};
    for (int i = 0; i < 9; ++i)
      c.comments.push_back(make_comment("a" + std::to_string(i), "v1"));
    for (int i = 0; i < 8; ++i)
      c.comments.push_back(make_comment("b" + std::to_string(i), "v2"));
    c.rebuild_index();
    CHECK(discrepancy_report(c).missing_rate == doctest::Approx(3.0 / 20.0));
  }
  SUBCASE("over-reporting clamps to 0 and flags") {
    Corpus c;
    c.videos = {make_video("v1", Category::Baseline, 1)};
    for (int i = 0; i < 4; ++i)
      c.comments.push_back(make_comment("c" + std::to_string(i), "v1"));
    c.rebuild_index();
    DiscrepancyReport r = discrepancy_report(c);
    CHECK(r.rows[0].missing == 0);
    CHECK(r.rows[0].over_reported);
  }
}

TEST_CASE("discrepancy histogram uses log2 buckets with -1 for zero") {
  Corpus c;
  c.videos = {make_video("v0", Category::Baseline, 0),   // missing 0 -> bucket -1
              make_video("v1", Category::Baseline, 1),   // missing 1 -> bucket 0
              make_video("v2", Category::Baseline, 5)};  // missing 5 -> bucket 2
  c.rebuild_index();
  DiscrepancyReport r = discrepancy_report(c);
  std::map<int, std::size_t> hist(r.log_histogram.begin(), r.log_histogram.end());
  CHECK(hist.at(-1) == 1);
  CHECK(hist.at(0) == 1);
  CHECK(hist.at(2) == 1);
}

TEST_CASE("diff_snapshots") {
  Corpus a;
  a.videos = {make_video("v1", Category::QAnon), make_video("v2", Category::QAnon),
              make_video("v3", Category::QAnon)};
  for (int i = 0; i < 100; ++i)
    a.comments.push_back(make_comment("c" + std::to_string(i), "v1"));
  a.rebuild_index();

  SUBCASE("identical corpora give the zero diff") {
    SnapshotDiff d = diff_snapshots(a, a);
    CHECK(d.is_zero());
  }
  SUBCASE("removed video counted") {
    Corpus b = a;
    b.videos.erase(b.videos.begin() + 2);  // drop v3
    b.rebuild_index();
    SnapshotDiff d = diff_snapshots(a, b);
    REQUIRE(d.rows.size() == 1);
    CHECK(d.rows[0].videos_removed == 1);
    CHECK(d.rows[0].videos_added == 0);
    CHECK(d.rows[0].videos_persisting == 2);
  }
  SUBCASE("comment delta on persisting video") {
    Corpus b = a;
    for (int i = 100; i < 120; ++i)
      b.comments.push_back(make_comment("c" + std::to_string(i), "v1"));
    b.rebuild_index();
    SnapshotDiff d = diff_snapshots(a, b);
    REQUIRE(d.rows.size() == 1);
    CHECK(d.rows[0].comment_delta == 20);
  }
  SUBCASE("antisymmetry: diff(a,b) == -diff(b,a)") {
    Corpus b = a;
    b.videos.erase(b.videos.begin());
    for (int i = 100; i < 110; ++i)
      b.comments.push_back(make_comment("c" + std::to_string(i), "v2"));
    b.videos.push_back(make_video("v9", Category::Baseline));
    b.rebuild_index();
    SnapshotDiff ab = diff_snapshots(a, b);
    SnapshotDiff ba = diff_snapshots(b, a);
    SnapshotDiff neg = ba.negated();
    REQUIRE(ab.rows.size() == neg.rows.size());
    for (std::size_t i = 0; i < ab.rows.size(); ++i) {
      CHECK(ab.rows[i].category == neg.rows[i].category);
      CHECK(ab.rows[i].videos_added == neg.rows[i].videos_added);
      CHECK(ab.rows[i].videos_removed == neg.rows[i].videos_removed);
      CHECK(ab.rows[i].comment_delta == neg.rows[i].comment_delta);
    }
  }
}

TEST_CASE("corpus fingerprint is order-independent and content-sensitive") {
  Corpus a = fixtures::small_corpus();
  Corpus b = a;
  std::swap(b.comments[0], b.comments[2]);
  std::swap(b.videos[0], b.videos[1]);
  b.rebuild_index();
  CHECK(corpus_fingerprint(a) == corpus_fingerprint(b));

  Corpus c = a;
  c.comments[0].text += "!";
  c.rebuild_index();
  CHECK(corpus_fingerprint(a) != corpus_fingerprint(c));
}
