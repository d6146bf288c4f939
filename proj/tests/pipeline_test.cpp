#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "engage/pipeline.hpp"
#include "fixtures.hpp"

using namespace engage;
using fixtures::make_comment;
using fixtures::make_video;

namespace {

// A corpus big enough to exercise every stage: 12 transcripted videos over two
// themes, ~130 comments mixing meaningful text with the spam shapes the
// labelling functions react to, plus a few reply threads.
Corpus pipeline_corpus() {
  std::mt19937_64 rng{77};
  Corpus c;
  const char* themes[2] = {
      "deep state hides secret plans the deep state controls media coverage",
      "moon landing footage shows moon landing cameras and landing site dust"};
  for (int v = 0; v < 12; ++v) {
    Video video = make_video("v" + std::to_string(v),
                             v < 6 ? Category::QAnon : Category::OtherConspiracies, 0,
                             "ch" + std::to_string(v % 3));
    video.view_count = 500 + static_cast<std::int64_t>(rng() % 2000);
    video.like_count = 20 + static_cast<std::int64_t>(rng() % 200);
    video.transcript = std::string(themes[v < 6 ? 0 : 1]) + " extra" + std::to_string(v % 3);
    c.videos.push_back(video);
  }
  int id = 0;
  auto add = [&](const std::string& text) {
    std::string video = "v" + std::to_string(rng() % 12);
    c.comments.push_back(make_comment("c" + std::to_string(1000 + id), video,
                                      "u" + std::to_string(rng() % 25), text,
                                      1600000000 + static_cast<std::int64_t>(rng() % 9000000)));
    ++id;
  };
  for (int i = 0; i < 90; ++i) add(fixtures::random_sentence(rng, 4 + rng() % 8));
  const char* meaningful[] = {"thank you", "great video", "well said",
                              "good point", "so true",    "agreed"};
  for (int i = 0; i < 30; ++i) add(meaningful[i % 6]);
  for (int i = 0; i < 8; ++i)
    add("http://spam.example/a" + std::to_string(i) + " http://spam.example/b");
  for (int i = 0; i < 5; ++i)
    add("subscribe and click the link http://promo.example/deal" + std::to_string(i));
  for (int i = 0; i < 5; ++i)
    add("check out my channel http://videos.example/mine" + std::to_string(i));
  for (int i = 0; i < 6; ++i) add("lol");
  // reply threads on the first few top-level comments
  for (int i = 0; i < 6; ++i) {
    Comment r = fixtures::make_reply("r" + std::to_string(i), c.comments[i].video_id,
                                     c.comments[i].comment_id, "u" + std::to_string(rng() % 25),
                                     i % 2 ? "you're wrong about this" : "i agree with you",
                                     c.comments[i].published_at + 500);
    c.comments.push_back(r);
  }
  c.rebuild_index();
  return c;
}

PipelineConfig small_config() {
  PipelineConfig config;
  config.reduce_dim = 4;
  config.min_cluster_size = 3;
  config.min_samples = 2;
  return config;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run_pipeline seals a healthy run with every stage persisted") {
  fixtures::TempDir tmp;
  write_corpus(pipeline_corpus(), tmp / "corpus.jsonl");
  PipelineRun run = run_pipeline({tmp / "corpus.jsonl"}, small_config(), tmp / "runs");

  CHECK(run.sealed);
  CHECK_FALSE(run.failure.has_value());
  CHECK(run.completed_stages == pipeline_stage_names());
  for (const char* f : {"corpus.jsonl", "kept.jsonl", "dropped.jsonl", "topics.json",
                        "signals.jsonl", "signal_profile.json", "stance.jsonl",
                        "stance_summary.json", "manifest.json"}) {
    CHECK(std::filesystem::exists(run.dir / f));
  }
  CHECK(std::filesystem::exists(run.dir / "analytics" / "quartiles.csv"));

  SUBCASE("the filter actually dropped the spam") {
    Corpus kept = load_corpus(run.dir / "kept.jsonl", Category::Baseline);
    CHECK(kept.comments.size() < 150);
    CHECK(kept.comments.size() >= 90);  // the conversational bulk survives
    CHECK(!kept.comments.empty());
    std::string dropped = slurp(run.dir / "dropped.jsonl");
    CHECK(dropped.find("http://spam.example/0") == std::string::npos);  // ids only
    CHECK(dropped.find("label_function") == std::string::npos);
    CHECK(dropped.find("\"votes\"") != std::string::npos);
  }
  SUBCASE("stance results load back sorted by comment id") {
    auto results = load_stance_results(run.dir / "stance.jsonl");
    CHECK(!results.empty());
    for (std::size_t i = 1; i < results.size(); ++i)
      CHECK(results[i - 1].comment_id < results[i].comment_id);
  }
  SUBCASE("load_run and list_runs round-trip the manifest") {
    PipelineRun back = load_run(run.dir);
    CHECK(back.run_id == run.run_id);
    CHECK(back.sealed);
    CHECK(back.completed_stages == run.completed_stages);
    CHECK(back.corpus_fp == run.corpus_fp);
    CHECK(back.config_fingerprint == run.config_fingerprint);

    auto runs = list_runs(tmp / "runs");
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].run_id == run.run_id);
    CHECK(runs[0].stage_done("analytics"));
  }
}

TEST_CASE("identical inputs reproduce identical stage files and run ids") {
  fixtures::TempDir tmp;
  write_corpus(pipeline_corpus(), tmp / "corpus.jsonl");
  PipelineConfig config = small_config();
  PipelineRun a = run_pipeline({tmp / "corpus.jsonl"}, config, tmp / "runs_a");
  PipelineRun b = run_pipeline({tmp / "corpus.jsonl"}, config, tmp / "runs_b");

  REQUIRE(a.sealed);
  REQUIRE(b.sealed);
  CHECK(a.run_id == b.run_id);  // content-addressed
  // every data file is byte-identical; manifest.json is excluded because it
  // carries wall-clock stage timestamps
  for (const char* f : {"corpus.jsonl", "kept.jsonl", "dropped.jsonl", "topics.json",
                        "signals.jsonl", "signal_profile.json", "stance.jsonl",
                        "stance_summary.json"}) {
    CHECK(slurp(a.dir / f) == slurp(b.dir / f));
  }
  for (const char* f : {"quartiles.csv", "correlation.csv", "ecdf.csv", "timeseries.csv",
                        "spikes.csv"}) {
    CHECK(slurp(a.dir / "analytics" / f) == slurp(b.dir / "analytics" / f));
  }
}

TEST_CASE("a failing stage leaves a readable partial run") {
  fixtures::TempDir tmp;
  write_corpus(pipeline_corpus(), tmp / "corpus.jsonl");
  PipelineConfig config = small_config();
  config.min_cluster_size = 0;  // rejected by the clustering parameter checks
  PipelineRun run = run_pipeline({tmp / "corpus.jsonl"}, config, tmp / "runs");

  CHECK_FALSE(run.sealed);
  REQUIRE(run.failure.has_value());
  CHECK(run.failure->stage == "topics");
  CHECK_FALSE(run.failure->message.empty());
  CHECK(run.stage_done("ingest"));
  CHECK(run.stage_done("filter"));
  CHECK_FALSE(run.stage_done("topics"));
  // the completed stages stay fully usable
  Corpus kept = load_corpus(run.dir / "kept.jsonl", Category::Baseline);
  CHECK(!kept.comments.empty());
  CHECK_FALSE(std::filesystem::exists(run.dir / "topics.json"));
  // and the failure is recorded machine-readably in the manifest
  PipelineRun back = load_run(run.dir);
  REQUIRE(back.failure.has_value());
  CHECK(back.failure->stage == "topics");
  CHECK_FALSE(back.sealed);
}

TEST_CASE("duplicate comment ids across input corpora are rejected") {
  fixtures::TempDir tmp;
  Corpus c = fixtures::small_corpus();
  write_corpus(c, tmp / "a.jsonl");
  write_corpus(c, tmp / "b.jsonl");
  CHECK_THROWS_WITH_AS(
      run_pipeline({tmp / "a.jsonl", tmp / "b.jsonl"}, small_config(), tmp / "runs"),
      doctest::Contains("duplicate comment id"), std::runtime_error);
}

TEST_CASE("PipelineConfig round-trips through its JSON file form") {
  fixtures::TempDir tmp;
  PipelineConfig config = small_config();
  config.bucket = TimeBucket::Week;
  config.spike_factor = 2.5;
  config.stance.tau = 0.2;
  config.kb_dir = "claims";
  std::ofstream(tmp / "config.json") << config.to_json_string();

  PipelineConfig back = PipelineConfig::from_file(tmp / "config.json");
  CHECK(back.bucket == TimeBucket::Week);
  CHECK(back.spike_factor == 2.5);
  CHECK(back.stance.tau == 0.2);
  CHECK(back.kb_dir == "claims");
  CHECK(back.min_cluster_size == 3);
  CHECK(back.fingerprint() == config.fingerprint());

  // fingerprint is sensitive to any field change
  back.filter_threshold = 0.75;
  CHECK(back.fingerprint() != config.fingerprint());

  std::ofstream(tmp / "bad.json") << R"({"bucket":"fortnight"})";
  CHECK_THROWS(PipelineConfig::from_file(tmp / "bad.json"));
}

TEST_CASE("load_kb_dir picks up per-topic claim files by either naming scheme") {
  fixtures::TempDir tmp;
  std::filesystem::create_directories(tmp / "kb");
  std::ofstream(tmp.path / "kb" / "0.kb") << "S\tthe deep state is real\n";
  std::ofstream(tmp.path / "kb" / "topic_3.kb") << "C\tthe moon landing happened\n";
  std::ofstream(tmp.path / "kb" / "notes.txt") << "ignored\n";

  HashedNGramBackend backend;
  auto kbs = load_kb_dir(tmp / "kb", backend);
  REQUIRE(kbs.size() == 2);
  CHECK(kbs.at(0).claims[0].polarity == ClaimPolarity::SupportsNarrative);
  CHECK(kbs.at(3).claims[0].polarity == ClaimPolarity::ContradictsNarrative);
  CHECK(load_kb_dir(tmp / "missing", backend).empty());
}

TEST_CASE("stance results round-trip through the JSONL form") {
  fixtures::TempDir tmp;
  std::vector<StanceResult> results(2);
  results[0].comment_id = "a";
  results[0].label = StanceLabel::Against;
  results[0].evidence.explicit_marker = {"nonsense", StanceLabel::Against};
  results[0].evidence.anchor = AnchorKind::Referenced;
  results[0].evidence.anchor_id = "b";
  results[0].evidence.combined = -0.4;
  results[1].comment_id = "b";
  results[1].label = StanceLabel::Favour;
  results[1].evidence.similarity = 0.9;
  results[1].evidence.mention_fallback_flag = true;

  write_stance_results(results, tmp / "stance.jsonl");
  auto back = load_stance_results(tmp / "stance.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].label == StanceLabel::Against);
  REQUIRE(back[0].evidence.explicit_marker.has_value());
  CHECK(back[0].evidence.explicit_marker->first == "nonsense");
  CHECK(back[0].evidence.anchor == AnchorKind::Referenced);
  CHECK(back[0].evidence.anchor_id == "b");
  CHECK(back[0].evidence.combined == doctest::Approx(-0.4));
  CHECK(back[1].evidence.similarity == doctest::Approx(0.9));
  CHECK(back[1].evidence.mention_fallback_flag);
  CHECK_FALSE(back[1].evidence.explicit_marker.has_value());
}
