#include "engage/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "engage/filter.hpp"
#include "engage/signals.hpp"
#include "engage/text.hpp"
#include "engage/topics.hpp"

namespace engage {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["backend"] = c.backend;
  j["signal_backend"] = c.signal_backend;
  j["filter_threshold"] = c.filter_threshold;
  j["reduce_dim"] = c.reduce_dim;
  j["min_cluster_size"] = c.min_cluster_size;
  j["min_samples"] = c.min_samples;
  j["top_k"] = c.top_k;
  j["stance"] = {{"w_similarity", c.stance.w_similarity},
                 {"w_kb", c.stance.w_kb},
                 {"w_rule", c.stance.w_rule},
                 {"tau", c.stance.tau},
                 {"tau_reply", c.stance.tau_reply}};
  j["kb_dir"] = c.kb_dir;
  j["bucket"] = c.bucket == TimeBucket::Day ? "day"
              : c.bucket == TimeBucket::Week ? "week"
                                             : "month";
  j["spike_factor"] = c.spike_factor;
  j["exclude_creator"] = c.exclude_creator;
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  c.backend = j.value("backend", c.backend);
  c.signal_backend = j.value("signal_backend", c.signal_backend);
  c.filter_threshold = j.value("filter_threshold", c.filter_threshold);
  c.reduce_dim = j.value("reduce_dim", c.reduce_dim);
  c.min_cluster_size = j.value("min_cluster_size", c.min_cluster_size);
  c.min_samples = j.value("min_samples", c.min_samples);
  c.top_k = j.value("top_k", c.top_k);
  if (j.contains("stance")) {
    const json& s = j.at("stance");
    c.stance.w_similarity = s.value("w_similarity", c.stance.w_similarity);
    c.stance.w_kb = s.value("w_kb", c.stance.w_kb);
    c.stance.w_rule = s.value("w_rule", c.stance.w_rule);
    c.stance.tau = s.value("tau", c.stance.tau);
    c.stance.tau_reply = s.value("tau_reply", c.stance.tau_reply);
  }
  c.kb_dir = j.value("kb_dir", c.kb_dir);
  std::string bucket = j.value("bucket", std::string("month"));
  if (bucket == "day") c.bucket = TimeBucket::Day;
  else if (bucket == "week") c.bucket = TimeBucket::Week;
  else if (bucket == "month") c.bucket = TimeBucket::Month;
  else throw std::runtime_error("unknown bucket: " + bucket);
  c.spike_factor = j.value("spike_factor", c.spike_factor);
  c.exclude_creator = j.value("exclude_creator", c.exclude_creator);
  return c;
}

std::string anchor_name(AnchorKind k) {
  switch (k) {
    case AnchorKind::Topic: return "topic";
    case AnchorKind::ParentComment: return "parent";
    case AnchorKind::Referenced: return "referenced";
  }
  return "topic";
}

AnchorKind parse_anchor(const std::string& s) {
  if (s == "parent") return AnchorKind::ParentComment;
  if (s == "referenced") return AnchorKind::Referenced;
  return AnchorKind::Topic;
}

struct ManifestWriter {
  PipelineRun* run;
  json config_json;
  json stages = json::array();

  void record(const std::string& stage) {
    run->completed_stages.push_back(stage);
    stages.push_back({{"name", stage},
                      {"completed_at", static_cast<std::int64_t>(std::time(nullptr))}});
    flush();
  }

  void flush() const {
    json j;
    j["run_id"] = run->run_id;
    j["config_fingerprint"] = hex64(run->config_fingerprint);
    j["corpus_fingerprint"] = hex64(run->corpus_fp);
    j["status"] = run->sealed ? "sealed" : "partial";
    j["stages"] = stages;
    j["config"] = config_json;
    if (run->failure) {
      j["failure"] = {{"stage", run->failure->stage}, {"message", run->failure->message}};
    }
    std::ofstream out(run->dir / "manifest.json");
    out << j.dump(2) << '\n';
  }
};

Corpus ingest_paths(const std::vector<std::filesystem::path>& paths, bool exclude_creator) {
  if (paths.empty()) throw std::invalid_argument("no corpus paths given");
  Corpus merged;
  std::set<std::string> seen_comments, seen_videos, seen_channels;
  for (const auto& p : paths) {
    Corpus c = load_corpus(p, Category::Baseline);
    for (auto& v : c.videos) {
      if (seen_videos.insert(v.video_id).second) merged.videos.push_back(std::move(v));
    }
    for (auto& ch : c.channels) {
      if (seen_channels.insert(ch.channel_id).second) merged.channels.push_back(std::move(ch));
    }
    for (auto& cm : c.comments) {
      if (!seen_comments.insert(cm.comment_id).second)
        throw std::runtime_error("duplicate comment id across corpora: " + cm.comment_id);
      merged.comments.push_back(std::move(cm));
    }
    for (auto& cm : c.orphans) {
      if (!seen_comments.insert(cm.comment_id).second)
        throw std::runtime_error("duplicate comment id across corpora: " + cm.comment_id);
      merged.comments.push_back(std::move(cm));
    }
  }
  merged.rebuild_index();
  if (exclude_creator) merged = exclude_creator_comments(merged);
  return merged;
}

void write_signals(const std::vector<CommentSignals>& signals,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  for (const auto& s : signals) {
    json j;
    j["comment_id"] = s.comment_id;
    j["sentiment"] = sentiment_name(s.sentiment.label);
    j["sentiment_score"] = s.sentiment.score;
    j["emotion"] = emotion_name(s.emotion.label);
    out << j.dump() << '\n';
  }
}

void write_signal_profile(const SignalProfile& profile, const std::filesystem::path& path) {
  json rows = json::array();
  for (const auto& r : profile.rows) {
    json row;
    row["category"] = category_name(r.category);
    row["q3"] = r.q3;
    row["active_users"] = r.active_users;
    row["active_comments"] = r.active_comments;
    json sent, emo;
    for (const auto& [s, v] : r.sentiment_share) sent[sentiment_name(s)] = v;
    for (const auto& [e, v] : r.emotion_share) emo[emotion_name(e)] = v;
    row["sentiment_share"] = sent.is_null() ? json::object() : sent;
    row["emotion_share"] = emo.is_null() ? json::object() : emo;
    rows.push_back(std::move(row));
  }
  std::ofstream out(path);
  out << json{{"rows", rows}}.dump(2) << '\n';
}

void write_stance_summary(const StanceSummary& summary, const std::filesystem::path& path) {
  json rows = json::array();
  for (const auto& r : summary.rows) {
    json row;
    row["category"] = category_name(r.category);
    row["total"] = r.total;
    row["empty"] = r.empty_flag;
    for (StanceLabel l : {StanceLabel::Favour, StanceLabel::Against, StanceLabel::Neutral}) {
      auto it = r.share.find(l);
      row[stance_name(l)] = it == r.share.end() ? 0.0 : it->second;
    }
    rows.push_back(std::move(row));
  }
  std::ofstream out(path);
  out << json{{"rows", rows}}.dump(2) << '\n';
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  json j;
  in >> j;
  return config_from_json(j);
}

std::string PipelineConfig::to_json_string() const { return config_to_json(*this).dump(2); }

std::uint64_t PipelineConfig::fingerprint() const {
  return text::fnv1a(config_to_json(*this).dump());
}

bool PipelineRun::stage_done(const std::string& name) const {
  return std::find(completed_stages.begin(), completed_stages.end(), name) !=
         completed_stages.end();
}

std::map<int, KnowledgeBase> load_kb_dir(const std::filesystem::path& dir,
                                         const EmbeddingBackend& backend) {
  std::map<int, KnowledgeBase> kbs;
  if (dir.empty() || !std::filesystem::is_directory(dir)) return kbs;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".kb") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string stem = f.stem().string();
    if (stem.rfind("topic_", 0) == 0) stem = stem.substr(6);
    int topic_id = 0;
    try {
      topic_id = std::stoi(stem);
    } catch (const std::exception&) {
      continue;  // not a per-topic claim file
    }
    kbs.emplace(topic_id, KnowledgeBase::from_file(f, topic_id, backend));
  }
  return kbs;
}

void write_stance_results(const std::vector<StanceResult>& results,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  for (const auto& r : results) {
    json j;
    j["comment_id"] = r.comment_id;
    j["label"] = stance_name(r.label);
    j["anchor"] = anchor_name(r.evidence.anchor);
    j["anchor_id"] = r.evidence.anchor_id;
    j["similarity"] = r.evidence.similarity;
    j["kb_entailment"] = r.evidence.kb_entailment;
    j["rule_score"] = r.evidence.rule_score;
    j["combined"] = r.evidence.combined;
    j["mention_fallback"] = r.evidence.mention_fallback_flag;
    if (r.evidence.explicit_marker) {
      j["marker"] = r.evidence.explicit_marker->first;
      j["marker_direction"] = stance_name(r.evidence.explicit_marker->second);
    }
    out << j.dump() << '\n';
  }
}

std::vector<StanceResult> load_stance_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stance results: " + path.string());
  std::vector<StanceResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    json j = json::parse(line);
    StanceResult r;
    r.comment_id = j.at("comment_id").get<std::string>();
    r.label = parse_stance(j.at("label").get<std::string>()).value_or(StanceLabel::Neutral);
    r.evidence.anchor = parse_anchor(j.value("anchor", std::string("topic")));
    r.evidence.anchor_id = j.value("anchor_id", std::string());
    r.evidence.similarity = j.value("similarity", 0.0);
    r.evidence.kb_entailment = j.value("kb_entailment", 0.0);
    r.evidence.rule_score = j.value("rule_score", 0.0);
    r.evidence.combined = j.value("combined", 0.0);
    r.evidence.mention_fallback_flag = j.value("mention_fallback", false);
    if (j.contains("marker")) {
      r.evidence.explicit_marker = std::make_pair(
          j.at("marker").get<std::string>(),
          parse_stance(j.at("marker_direction").get<std::string>())
              .value_or(StanceLabel::Neutral));
    }
    results.push_back(std::move(r));
  }
  return results;
}

PipelineRun run_pipeline(const std::vector<std::filesystem::path>& corpus_paths,
                         const PipelineConfig& config,
                         const std::filesystem::path& out_root) {
  // Ingest runs up front so the run id can be derived from the corpus content.
  Corpus corpus = ingest_paths(corpus_paths, config.exclude_creator);

  PipelineRun run;
  run.config_fingerprint = config.fingerprint();
  run.corpus_fp = corpus_fingerprint(corpus);
  run.run_id = hex64(text::fnv1a(hex64(run.corpus_fp) + hex64(run.config_fingerprint)));
  run.dir = out_root / run.run_id;
  std::filesystem::create_directories(run.dir);

  ManifestWriter manifest{&run, config_to_json(config)};
  write_corpus(corpus, run.dir / "corpus.jsonl");
  manifest.record("ingest");

  Corpus kept;
  try {
    std::vector<std::string> texts;
    texts.reserve(corpus.comments.size());
    for (const auto& c : corpus.comments) texts.push_back(c.text);
    FilterModel model = FilterModel::fit(texts, FilterLexicons::defaults());
    FilterOutput out = filter_corpus(corpus, model, config.filter_threshold);
    kept = std::move(out.kept);
    write_corpus(kept, run.dir / "kept.jsonl");
    {
      std::ofstream trace(run.dir / "dropped.jsonl");
      for (const auto& v : out.dropped) {
        json j;
        j["comment_id"] = v.comment_id;
        j["p_irrelevant"] = v.p_irrelevant;
        json votes = json::array();
        auto ids = label_function_ids();
        for (std::size_t i = 0; i < v.votes.size(); ++i) {
          const char* val = v.votes[i].vote == Vote::Irrelevant ? "irrelevant"
                          : v.votes[i].vote == Vote::Relevant   ? "relevant"
                                                                : "abstain";
          votes.push_back({{"lf", i < ids.size() ? ids[i] : std::to_string(i)}, {"vote", val}});
        }
        j["votes"] = votes;
        trace << j.dump() << '\n';
      }
    }
    manifest.record("filter");
  } catch (const std::exception& e) {
    run.failure = {"filter", e.what()};
    manifest.flush();
    return run;
  }

  auto backend = make_backend(config.backend);
  TopicModelReport topics;
  try {
    TopicModelConfig tc;
    tc.reduce_dim = config.reduce_dim;
    tc.min_cluster_size = config.min_cluster_size;
    tc.min_samples = config.min_samples;
    tc.top_k = config.top_k;
    topics = model_topics(kept, *backend, tc);
    write_topic_report(topics, run.dir / "topics.json");
    manifest.record("topics");
  } catch (const std::exception& e) {
    run.failure = {"topics", e.what()};
    manifest.flush();
    return run;
  }

  std::vector<CommentSignals> signals;
  try {
    std::unique_ptr<SignalBackend> sig_backend;
    if (config.signal_backend.empty()) {
      sig_backend = std::make_unique<LexiconBackend>();
    } else {
      sig_backend = std::make_unique<PrecomputedSignalBackend>(config.signal_backend);
    }
    signals.reserve(kept.comments.size());
    for (const auto& c : kept.comments) {
      signals.push_back({c.comment_id, classify_sentiment(c.text, *sig_backend),
                         classify_emotion(c.text, *sig_backend)});
    }
    write_signals(signals, run.dir / "signals.jsonl");
    write_signal_profile(active_user_signal_profile(kept, signals),
                         run.dir / "signal_profile.json");
    manifest.record("signals");
  } catch (const std::exception& e) {
    run.failure = {"signals", e.what()};
    manifest.flush();
    return run;
  }

  try {
    auto kbs = load_kb_dir(config.kb_dir, *backend);
    auto results = detect_stance_corpus(kept, topics, *backend, kbs, config.stance);
    std::sort(results.begin(), results.end(),
              [](const StanceResult& a, const StanceResult& b) {
                return a.comment_id < b.comment_id;
              });
    write_stance_results(results, run.dir / "stance.jsonl");
    write_stance_summary(stance_summary(kept, results), run.dir / "stance_summary.json");
    manifest.record("stance");
  } catch (const std::exception& e) {
    run.failure = {"stance", e.what()};
    manifest.flush();
    return run;
  }

  try {
    write_report_bundle(kept, run.dir / "analytics", config.bucket, config.spike_factor);
    manifest.record("analytics");
  } catch (const std::exception& e) {
    run.failure = {"analytics", e.what()};
    manifest.flush();
    return run;
  }

  run.sealed = true;
  manifest.flush();
  return run;
}

PipelineRun load_run(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest in " + run_dir.string());
  json j;
  in >> j;
  PipelineRun run;
  run.run_id = j.at("run_id").get<std::string>();
  run.dir = run_dir;
  run.config_fingerprint = parse_hex64(j.at("config_fingerprint").get<std::string>());
  run.corpus_fp = parse_hex64(j.at("corpus_fingerprint").get<std::string>());
  run.sealed = j.at("status").get<std::string>() == "sealed";
  for (const auto& s : j.at("stages")) {
    run.completed_stages.push_back(s.at("name").get<std::string>());
  }
  if (j.contains("failure")) {
    run.failure = {j.at("failure").at("stage").get<std::string>(),
                   j.at("failure").at("message").get<std::string>()};
  }
  return run;
}

std::vector<PipelineRun> list_runs(const std::filesystem::path& out_root) {
  std::vector<PipelineRun> runs;
  if (!std::filesystem::is_directory(out_root)) return runs;
  for (const auto& entry : std::filesystem::directory_iterator(out_root)) {
    if (!entry.is_directory()) continue;
    if (!std::filesystem::exists(entry.path() / "manifest.json")) continue;
    runs.push_back(load_run(entry.path()));
  }
  std::sort(runs.begin(), runs.end(),
            [](const PipelineRun& a, const PipelineRun& b) { return a.run_id < b.run_id; });
  return runs;
}

}  // namespace engage
