#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "engage/corpus.hpp"

namespace engage {

enum class Sentiment { Negative, Neutral, Positive };

std::string sentiment_name(Sentiment s);

struct SentimentResult {
  Sentiment label = Sentiment::Neutral;
  double score = 0.0;  // in [-1, 1]
};

// Tie order is fixed: earlier entry wins on equal scores.
enum class Emotion { Anger, Fear, Joy, Optimism, Sadness, Other };
constexpr std::array<Emotion, 6> kEmotionOrder = {Emotion::Anger, Emotion::Fear,
                                                  Emotion::Joy,   Emotion::Optimism,
                                                  Emotion::Sadness, Emotion::Other};

std::string emotion_name(Emotion e);

struct EmotionResult {
  Emotion label = Emotion::Other;
  std::map<Emotion, double> scores;
};

class SignalBackend {
 public:
  virtual ~SignalBackend() = default;
  virtual SentimentResult sentiment(std::string_view text) const = 0;
  virtual EmotionResult emotion(std::string_view text) const = 0;
};

struct SignalLexicons {
  std::map<std::string, double> sentiment;  // token -> polarity weight
  std::vector<std::string> negators;
  std::map<Emotion, std::vector<std::string>> emotion;

  static SignalLexicons defaults();
  // "token<TAB>weight" per line for sentiment; emotion files are plain lists.
  static std::map<std::string, double> load_weighted(const std::filesystem::path& path);
};

// score = sum(token polarities) / sqrt(token count), sign flipped for tokens
// within 3 positions after a negator, clamped to [-1,1].
class LexiconBackend : public SignalBackend {
 public:
  explicit LexiconBackend(SignalLexicons lexicons = SignalLexicons::defaults(),
                          double neutral_band = 0.1);
  SentimentResult sentiment(std::string_view text) const override;
  EmotionResult emotion(std::string_view text) const override;

 private:
  SignalLexicons lexicons_;
  double neutral_band_;
};

// Looks scores up by content hash from a sidecar file written by a real model.
// JSONL: {"hash":"<16 hex>","sentiment":s,"emotions":{"joy":x,...}}.
class PrecomputedSignalBackend : public SignalBackend {
 public:
  explicit PrecomputedSignalBackend(const std::filesystem::path& index_file,
                                    double neutral_band = 0.1);
  SentimentResult sentiment(std::string_view text) const override;  // throws on miss
  EmotionResult emotion(std::string_view text) const override;

 private:
  struct Entry {
    double sentiment_score = 0.0;
    std::map<Emotion, double> emotions;
  };
  std::map<std::uint64_t, Entry> index_;
  double neutral_band_;
};

SentimentResult classify_sentiment(std::string_view text, const SignalBackend& backend);
EmotionResult classify_emotion(std::string_view text, const SignalBackend& backend);

struct CommentSignals {
  std::string comment_id;
  SentimentResult sentiment;
  EmotionResult emotion;
};

struct SignalProfile {
  struct DatasetRow {
    Category category;
    double q3 = 0.0;                       // per-user comment-count threshold
    std::size_t active_users = 0;
    std::size_t active_comments = 0;
    std::map<Sentiment, double> sentiment_share;  // sums to 1 when non-empty
    std::map<Emotion, double> emotion_share;
  };
  std::vector<DatasetRow> rows;
};

// Restrict to users strictly above the dataset's Q3 comment count (type-7
// quartiles) and report label proportions of their comments.
SignalProfile active_user_signal_profile(const Corpus& corpus,
                                         const std::vector<CommentSignals>& signals);

}  // namespace engage
