#include "engage/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "engage/analytics.hpp"
#include "engage/embed.hpp"
#include "engage/text.hpp"

namespace engage {

std::string sentiment_name(Sentiment s) {
  switch (s) {
    case Sentiment::Negative: return "negative";
    case Sentiment::Neutral: return "neutral";
    case Sentiment::Positive: return "positive";
  }
  return "neutral";
}

std::string emotion_name(Emotion e) {
  switch (e) {
    case Emotion::Joy: return "joy";
    case Emotion::Anger: return "anger";
    case Emotion::Sadness: return "sadness";
    case Emotion::Fear: return "fear";
    case Emotion::Optimism: return "optimism";
    case Emotion::Other: return "other";
  }
  return "other";
}

SignalLexicons SignalLexicons::defaults() {
  SignalLexicons lx;
  lx.sentiment = {
      {"love", 1.0},    {"loved", 1.0},   {"great", 1.0},    {"good", 1.0},
      {"awesome", 1.0}, {"amazing", 1.0}, {"excellent", 1.0},{"best", 1.0},
      {"beautiful", 1.0},{"wonderful", 1.0},{"brilliant", 1.0},{"happy", 1.0},
      {"thanks", 0.5},  {"thank", 0.5},   {"like", 0.5},     {"agree", 0.5},
      {"right", 0.5},   {"interesting", 0.5}, {"win", 0.5},  {"hope", 0.5},
      {"hate", -1.0},   {"terrible", -1.0},{"awful", -1.0},  {"horrible", -1.0},
      {"bad", -1.0},    {"worst", -1.0},  {"wrong", -1.0},   {"stupid", -1.0},
      {"dumb", -1.0},   {"fake", -1.0},   {"lie", -1.0},     {"lies", -1.0},
      {"liar", -1.0},   {"scam", -1.0},   {"evil", -1.0},    {"disgusting", -1.0},
      {"angry", -1.0},  {"sad", -0.5},    {"fear", -0.5},    {"afraid", -0.5},
      {"nonsense", -1.0},{"garbage", -1.0},{"trash", -1.0},  {"sick", -0.5}};
  lx.negators = {"not",   "no",     "never",  "don't",   "dont",    "isn't",  "isnt",
                 "can't", "cant",   "cannot", "won't",   "wont",    "wasn't", "wasnt",
                 "didn't","didnt",  "doesn't","doesnt",  "ain't",   "aint",   "nothing",
                 "hardly","nobody", "neither","without"};
  lx.emotion[Emotion::Joy] = {"happy", "joy",  "fun",   "lol",     "glad",  "love",
                              "laugh", "smile", "enjoy", "awesome", "amazing"};
  lx.emotion[Emotion::Anger] = {"angry", "anger", "mad",     "furious", "rage",
                                "hate",  "evil",  "corrupt", "disgusting", "outraged"};
  lx.emotion[Emotion::Sadness] = {"sad",  "cry",  "tears", "depressed",
                                  "lost", "miss", "sorry", "grief"};
  lx.emotion[Emotion::Fear] = {"fear", "scared", "afraid", "terrified",
                               "worried", "panic", "scary", "danger"};
  lx.emotion[Emotion::Optimism] = {"hope", "hopeful", "optimistic", "better",
                                   "improve", "future", "faith", "believe"};
  return lx;
}

std::map<std::string, double> SignalLexicons::load_weighted(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path.string());
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = text::trim(line);
    if (t.empty()) continue;
    auto tab = t.find_first_of("\t ");
    if (tab == std::string::npos) {
      out[text::to_lower(t)] = 1.0;
    } else {
      out[text::to_lower(t.substr(0, tab))] = std::stod(t.substr(tab + 1));
    }
  }
  return out;
}

LexiconBackend::LexiconBackend(SignalLexicons lexicons, double neutral_band)
    : lexicons_(std::move(lexicons)), neutral_band_(neutral_band) {}

SentimentResult LexiconBackend::sentiment(std::string_view input) const {
  auto tokens = text::tokenize_lower(input);
  SentimentResult res;
  if (tokens.empty()) return res;
  double sum = 0.0;
  std::ptrdiff_t last_negator = -100;
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(tokens.size()); ++i) {
    const auto& tok = tokens[static_cast<std::size_t>(i)];
    bool negator = std::find(lexicons_.negators.begin(), lexicons_.negators.end(), tok) !=
                   lexicons_.negators.end();
    if (negator) {
      last_negator = i;
      continue;
    }
    auto it = lexicons_.sentiment.find(tok);
    if (it == lexicons_.sentiment.end()) continue;
    double w = it->second;
    if (i - last_negator <= 3) w = -w;
    sum += w;
  }
  res.score = std::clamp(sum / std::sqrt(static_cast<double>(tokens.size())), -1.0, 1.0);
  if (res.score > neutral_band_) res.label = Sentiment::Positive;
  else if (res.score < -neutral_band_) res.label = Sentiment::Negative;
  return res;
}

EmotionResult LexiconBackend::emotion(std::string_view input) const {
  auto tokens = text::tokenize_lower(input);
  EmotionResult res;
  for (Emotion e : kEmotionOrder) res.scores[e] = 0.0;
  if (tokens.empty()) return res;
  for (const auto& tok : tokens) {
    for (const auto& [e, words] : lexicons_.emotion) {
      if (std::find(words.begin(), words.end(), tok) != words.end())
        res.scores[e] += 1.0;
    }
  }
  for (auto& [e, s] : res.scores) s /= static_cast<double>(tokens.size());
  double best = 0.0;
  res.label = Emotion::Other;
  for (Emotion e : kEmotionOrder) {
    if (e == Emotion::Other) continue;
    if (res.scores[e] > best) {
      best = res.scores[e];
      res.label = e;
    }
  }
  return res;
}

PrecomputedSignalBackend::PrecomputedSignalBackend(const std::filesystem::path& index_file,
                                                   double neutral_band)
    : neutral_band_(neutral_band) {
  std::ifstream in(index_file);
  if (!in) throw std::runtime_error("cannot open signal index: " + index_file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    Entry e;
    e.sentiment_score = j.value("sentiment", 0.0);
    if (j.contains("emotions")) {
      for (Emotion em : kEmotionOrder) {
        auto name = emotion_name(em);
        if (j["emotions"].contains(name)) e.emotions[em] = j["emotions"][name].get<double>();
      }
    }
    index_[std::stoull(j.at("hash").get<std::string>(), nullptr, 16)] = std::move(e);
  }
}

SentimentResult PrecomputedSignalBackend::sentiment(std::string_view input) const {
  auto it = index_.find(PrecomputedBackend::content_hash(input));
  if (it == index_.end()) throw MissingVectorError("no precomputed sentiment for text");
  SentimentResult res;
  res.score = std::clamp(it->second.sentiment_score, -1.0, 1.0);
  if (res.score > neutral_band_) res.label = Sentiment::Positive;
  else if (res.score < -neutral_band_) res.label = Sentiment::Negative;
  return res;
}

EmotionResult PrecomputedSignalBackend::emotion(std::string_view input) const {
  auto it = index_.find(PrecomputedBackend::content_hash(input));
  if (it == index_.end()) throw MissingVectorError("no precomputed emotion for text");
  EmotionResult res;
  res.scores = it->second.emotions;
  double best = 0.0;
  res.label = Emotion::Other;
  for (Emotion e : kEmotionOrder) {
    if (e == Emotion::Other) continue;
    auto sit = res.scores.find(e);
    if (sit != res.scores.end() && sit->second > best) {
      best = sit->second;
      res.label = e;
    }
  }
  return res;
}

SentimentResult classify_sentiment(std::string_view input, const SignalBackend& backend) {
  if (text::trim(input).empty()) return {};
  return backend.sentiment(input);
}

EmotionResult classify_emotion(std::string_view input, const SignalBackend& backend) {
  if (text::trim(input).empty()) return {};
  return backend.emotion(input);
}

SignalProfile active_user_signal_profile(const Corpus& corpus,
                                         const std::vector<CommentSignals>& signals) {
  std::map<std::string, const CommentSignals*> by_id;
  for (const auto& s : signals) by_id[s.comment_id] = &s;

  std::map<Category, std::vector<const Comment*>> per_cat;
  for (const auto& c : corpus.comments) {
    const Video* v = corpus.find_video(c.video_id);
    if (!v) continue;
    per_cat[v->category].push_back(&c);
  }

  SignalProfile profile;
  for (const auto& [cat, comments] : per_cat) {
    SignalProfile::DatasetRow row;
    row.category = cat;
    std::map<std::string, std::size_t> per_user;
    for (const Comment* c : comments) ++per_user[c->author_id];
    std::vector<double> counts;
    counts.reserve(per_user.size());
    for (const auto& [u, n] : per_user) counts.push_back(static_cast<double>(n));
    row.q3 = quantile_type7(counts, 0.75);

    std::map<Sentiment, std::size_t> sent_counts;
    std::map<Emotion, std::size_t> emo_counts;
    std::size_t total = 0;
    for (const auto& [user, n] : per_user) {
      if (static_cast<double>(n) > row.q3) ++row.active_users;
    }
    for (const Comment* c : comments) {
      auto uit = per_user.find(c->author_id);
      if (static_cast<double>(uit->second) <= row.q3) continue;  // strict inequality
      auto sit = by_id.find(c->comment_id);
      if (sit == by_id.end()) continue;
      ++sent_counts[sit->second->sentiment.label];
      ++emo_counts[sit->second->emotion.label];
      ++total;
    }
    row.active_comments = total;
    if (total > 0) {
      for (const auto& [s, n] : sent_counts)
        row.sentiment_share[s] = static_cast<double>(n) / static_cast<double>(total);
      for (const auto& [e, n] : emo_counts)
        row.emotion_share[e] = static_cast<double>(n) / static_cast<double>(total);
    }
    profile.rows.push_back(std::move(row));
  }
  return profile;
}

}  // namespace engage
