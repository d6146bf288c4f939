#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "engage/analytics.hpp"
#include "engage/filter.hpp"
#include "engage/pipeline.hpp"
#include "engage/remote.hpp"
#include "engage/service.hpp"
#include "engage/signals.hpp"
#include "engage/stance.hpp"
#include "engage/topics.hpp"

using namespace engage;
using nlohmann::json;

namespace {

Category category_arg(const std::string& name) {
  auto c = parse_category(name);
  if (!c) throw CLI::ValidationError("category", "unknown category: " + name);
  return *c;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& client,
               const std::string& category, const std::string& out) {
  Category cat = category_arg(category);
  Corpus corpus;
  if (!client.empty()) {
    if (client.rfind("fixture:", 0) != 0)
      throw CLI::ValidationError("client", "expected fixture:<dir>");
    std::filesystem::path dir = client.substr(8);
    Corpus fixture = load_corpus(dir / "corpus.jsonl", cat);
    std::vector<std::string> ids;
    for (const auto& v : fixture.videos) ids.push_back(v.video_id);
    auto remote = FixtureClient::from_dir(dir, cat);
    FetchResult result = fetch_remote(*remote, ids, 50);
    corpus = std::move(result.corpus);
    std::fprintf(stderr, "fetched %zu videos (%zu unavailable, %zu pages)\n",
                 corpus.videos.size(), result.unavailable.size(), result.page_calls);
  } else {
    if (inputs.empty()) throw CLI::ValidationError("input", "need --input or --client");
    for (const auto& p : inputs) {
      LoadStats stats;
      Corpus part = load_corpus(p, cat, 0.01, &stats);
      for (auto& v : part.videos) corpus.videos.push_back(std::move(v));
      for (auto& c : part.channels) corpus.channels.push_back(std::move(c));
      for (auto& c : part.comments) corpus.comments.push_back(std::move(c));
      for (auto& c : part.orphans) corpus.comments.push_back(std::move(c));
      std::fprintf(stderr, "%s: %zu records, %zu malformed, %zu orphaned\n", p.c_str(),
                   stats.records, stats.malformed, stats.orphaned);
    }
    corpus.rebuild_index();
  }
  write_corpus(corpus, out);
  std::printf("wrote %zu videos, %zu comments, %zu orphans to %s\n", corpus.videos.size(),
              corpus.comments.size(), corpus.orphans.size(), out.c_str());
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b) {
  Corpus ca = load_corpus(a, Category::Baseline);
  Corpus cb = load_corpus(b, Category::Baseline);
  SnapshotDiff diff = diff_snapshots(ca, cb);
  std::printf("dataset,videos_added,videos_removed,videos_persisting,comment_delta\n");
  for (const auto& row : diff.rows) {
    std::printf("%s,%zu,%zu,%zu,%lld\n", category_name(row.category).c_str(),
                row.videos_added, row.videos_removed, row.videos_persisting,
                static_cast<long long>(row.comment_delta));
  }
  return 0;
}

int cmd_audit(const std::string& corpus_path) {
  Corpus corpus = load_corpus(corpus_path, Category::Baseline);
  DiscrepancyReport report = discrepancy_report(corpus);
  std::printf("video_id,reported,available,missing,over_reported\n");
  for (const auto& row : report.rows) {
    std::printf("%s,%lld,%lld,%lld,%d\n", row.video_id.c_str(),
                static_cast<long long>(row.reported), static_cast<long long>(row.available),
                static_cast<long long>(row.missing), row.over_reported ? 1 : 0);
  }
  std::printf("\nmissing_rate,%.10g\n", report.missing_rate);
  std::printf("\nlog2_bucket,videos\n");
  for (const auto& [bucket, n] : report.log_histogram) {
    std::printf("%d,%zu\n", bucket, n);
  }
  return 0;
}

int cmd_filter(const std::string& in, const std::string& out, const std::string& dropped,
               double threshold) {
  Corpus corpus = load_corpus(in, Category::Baseline);
  std::vector<std::string> texts;
  for (const auto& c : corpus.comments) texts.push_back(c.text);
  FilterModel model = FilterModel::fit(texts, FilterLexicons::defaults());
  FilterOutput result = filter_corpus(corpus, model, threshold);
  write_corpus(result.kept, out);
  std::ofstream trace(dropped);
  for (const auto& v : result.dropped) {
    json j{{"comment_id", v.comment_id}, {"p_irrelevant", v.p_irrelevant}};
    trace << j.dump() << '\n';
  }
  std::printf("kept %zu, dropped %zu (threshold %.3f)\n", result.kept.comments.size(),
              result.dropped.size(), threshold);
  return 0;
}

int cmd_topics(const std::string& in, const std::string& backend_spec,
               std::size_t min_cluster_size, const std::string& out) {
  Corpus corpus = load_corpus(in, Category::Baseline);
  auto backend = make_backend(backend_spec);
  TopicModelConfig config;
  config.min_cluster_size = min_cluster_size;
  TopicModelReport report = model_topics(corpus, *backend, config);
  write_topic_report(report, out);
  std::printf("topic,size,comments,coherence,keywords\n");
  for (const auto& c : report.clusters) {
    std::string kw;
    for (const auto& [phrase, score] : c.keywords) {
      if (!kw.empty()) kw += "; ";
      kw += phrase;
    }
    std::printf("%d,%zu,%zu,%.4f,\"%s\"\n", c.topic_id, c.size, c.comment_count, c.coherence,
                kw.c_str());
  }
  if (report.silhouette)
    std::printf("silhouette,%.4f\ndavies_bouldin,%.4f\n", *report.silhouette,
                *report.davies_bouldin);
  std::printf("noise_fraction,%.4f\n", report.noise_fraction);
  return 0;
}

int cmd_signals(const std::string& in, const std::string& out) {
  Corpus corpus = load_corpus(in, Category::Baseline);
  LexiconBackend backend;
  std::vector<CommentSignals> signals;
  std::ofstream of(out);
  for (const auto& c : corpus.comments) {
    CommentSignals s{c.comment_id, classify_sentiment(c.text, backend),
                     classify_emotion(c.text, backend)};
    json j{{"comment_id", s.comment_id},
           {"sentiment", sentiment_name(s.sentiment.label)},
           {"sentiment_score", s.sentiment.score},
           {"emotion", emotion_name(s.emotion.label)}};
    of << j.dump() << '\n';
    signals.push_back(std::move(s));
  }
  SignalProfile profile = active_user_signal_profile(corpus, signals);
  for (const auto& row : profile.rows) {
    std::printf("%s: q3=%.3g active_users=%zu active_comments=%zu\n",
                category_name(row.category).c_str(), row.q3, row.active_users,
                row.active_comments);
  }
  return 0;
}

int cmd_stance(const std::string& in, const std::string& topics_path, const std::string& kb_dir,
               const std::string& out) {
  Corpus corpus = load_corpus(in, Category::Baseline);
  TopicModelReport topics = load_topic_report(topics_path);
  auto backend = make_backend("hashed");
  auto kbs = load_kb_dir(kb_dir, *backend);
  auto results = detect_stance_corpus(corpus, topics, *backend, kbs, StanceConfig{});
  std::sort(results.begin(), results.end(),
            [](const StanceResult& a, const StanceResult& b) {
              return a.comment_id < b.comment_id;
            });
  write_stance_results(results, out);
  std::printf("labelled %zu comments -> %s\n", results.size(), out.c_str());
  return 0;
}

std::map<std::string, StanceLabel> load_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::map<std::string, StanceLabel> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    auto label = parse_stance(j.at("label").get<std::string>());
    if (!label) throw std::runtime_error("bad label in " + path + ": " + line);
    labels[j.at("comment_id").get<std::string>()] = *label;
  }
  return labels;
}

int cmd_stance_eval(const std::string& pred, const std::string& gold) {
  ClassReport report = evaluate_stance(load_label_file(pred), load_label_file(gold));
  std::fputs(report.format().c_str(), stdout);
  return 0;
}

int cmd_analyze(const std::string& in, const std::string& out, const std::string& bucket,
                double spike_factor) {
  Corpus corpus = load_corpus(in, Category::Baseline);
  TimeBucket tb = bucket == "day" ? TimeBucket::Day
                : bucket == "week" ? TimeBucket::Week
                                   : TimeBucket::Month;
  write_report_bundle(corpus, out, tb, spike_factor);
  std::printf("report bundle written to %s\n", out.c_str());
  return 0;
}

int cmd_pipeline_run(const std::string& config_path, const std::vector<std::string>& corpora,
                     const std::string& out) {
  PipelineConfig config =
      config_path.empty() ? PipelineConfig{} : PipelineConfig::from_file(config_path);
  std::vector<std::filesystem::path> paths(corpora.begin(), corpora.end());
  PipelineRun run = run_pipeline(paths, config, out);
  std::printf("run %s: %s\n", run.run_id.c_str(), run.sealed ? "sealed" : "partial");
  for (const auto& s : run.completed_stages) std::printf("  stage %s: done\n", s.c_str());
  if (run.failure) {
    std::printf("  stage %s: FAILED (%s)\n", run.failure->stage.c_str(),
                run.failure->message.c_str());
    return 1;
  }
  return 0;
}

int cmd_serve(const std::string& runs, const std::string& bind) {
  auto colon = bind.rfind(':');
  std::string host = colon == std::string::npos ? bind : bind.substr(0, colon);
  int port = colon == std::string::npos ? 8080 : std::stoi(bind.substr(colon + 1));
  QueryService service{runs};
  std::fprintf(stderr, "serving %s on %s:%d\n", runs.c_str(), host.c_str(), port);
  return service.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"comment-corpus analytics engine"};
  app.require_subcommand(1);

  std::vector<std::string> inputs, corpora;
  std::string client, category = "baseline", out, in, a, b, dropped, backend = "hashed";
  std::string topics_path, kb_dir, pred, gold, bucket = "month", config_path, runs;
  std::string bind = "127.0.0.1:8080";
  double threshold = 0.6, spike_factor = 3.0;
  std::size_t min_cluster_size = 15;

  auto* ingest = app.add_subcommand("ingest", "load/fetch a corpus snapshot");
  ingest->add_option("--input", inputs, "JSONL corpus paths");
  ingest->add_option("--client", client, "fixture:<dir> remote client");
  ingest->add_option("--category", category, "default dataset category");
  ingest->add_option("--out", out, "output corpus path")->required();

  auto* diff = app.add_subcommand("diff", "compare two corpus snapshots");
  diff->add_option("--a", a)->required();
  diff->add_option("--b", b)->required();

  auto* audit = app.add_subcommand("audit", "reported-vs-available discrepancy report");
  audit->add_option("--corpus", in)->required();

  auto* filter = app.add_subcommand("filter", "drop irrelevant comments");
  filter->add_option("--corpus", in)->required();
  filter->add_option("--out", out)->required();
  filter->add_option("--dropped", dropped)->required();
  filter->add_option("--threshold", threshold);

  auto* topics = app.add_subcommand("topics", "transcript topic model report");
  topics->add_option("--corpus", in)->required();
  topics->add_option("--backend", backend);
  topics->add_option("--min-cluster-size", min_cluster_size);
  topics->add_option("--out", out)->required();

  auto* signals = app.add_subcommand("signals", "sentiment/emotion labels");
  signals->add_option("--corpus", in)->required();
  signals->add_option("--out", out)->required();

  auto* stance = app.add_subcommand("stance", "topic-anchored stance labels");
  stance->add_option("--corpus", in)->required();
  stance->add_option("--topics", topics_path)->required();
  stance->add_option("--kb-dir", kb_dir);
  stance->add_option("--out", out)->required();

  auto* stance_eval = app.add_subcommand("stance-eval", "score predictions against gold");
  stance_eval->add_option("--pred", pred)->required();
  stance_eval->add_option("--gold", gold)->required();

  auto* analyze = app.add_subcommand("analyze", "engagement report bundle");
  analyze->add_option("--corpus", in)->required();
  analyze->add_option("--out", out)->required();
  analyze->add_option("--bucket", bucket)->check(CLI::IsMember({"day", "week", "month"}));
  analyze->add_option("--spike-factor", spike_factor);

  auto* pipeline = app.add_subcommand("pipeline", "orchestration");
  auto* pipeline_run = pipeline->add_subcommand("run", "execute all stages");
  pipeline_run->add_option("--config", config_path);
  pipeline_run->add_option("--corpus", corpora, "corpus JSONL paths")->required();
  pipeline_run->add_option("--out", out, "run store directory")->required();

  auto* serve = app.add_subcommand("serve", "query service over a run store");
  serve->add_option("--runs", runs)->required();
  serve->add_option("--bind", bind);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(inputs, client, category, out);
    if (*diff) return cmd_diff(a, b);
    if (*audit) return cmd_audit(in);
    if (*filter) return cmd_filter(in, out, dropped, threshold);
    if (*topics) return cmd_topics(in, backend, min_cluster_size, out);
    if (*signals) return cmd_signals(in, out);
    if (*stance) return cmd_stance(in, topics_path, kb_dir, out);
    if (*stance_eval) return cmd_stance_eval(pred, gold);
    if (*analyze) return cmd_analyze(in, out, bucket, spike_factor);
    if (*pipeline_run) return cmd_pipeline_run(config_path, corpora, out);
    if (*serve) return cmd_serve(runs, bind);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
