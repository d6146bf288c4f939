#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engage/corpus.hpp"
#include "engage/embed.hpp"
#include "engage/topics.hpp"

namespace engage {

enum class StanceLabel { Favour, Against, Neutral };

std::string stance_name(StanceLabel s);
std::optional<StanceLabel> parse_stance(std::string_view name);

enum class ClaimPolarity { SupportsNarrative, ContradictsNarrative };

struct KnowledgeBase {
  int topic_id = -1;
  struct Claim {
    std::string statement;
    ClaimPolarity polarity = ClaimPolarity::SupportsNarrative;
    EmbeddingVector embedding;
  };
  std::vector<Claim> claims;

  // Lines of "S<TAB>claim" / "C<TAB>claim"; embeddings from the active backend.
  static KnowledgeBase from_file(const std::filesystem::path& path, int topic_id,
                                 const EmbeddingBackend& backend);
};

struct StanceLexicons {
  std::vector<std::string> agreement_markers;
  std::vector<std::string> disagreement_markers;
  std::vector<std::string> negations;
  std::vector<std::pair<std::string, std::string>> antonyms;

  static StanceLexicons defaults();
};

enum class AnchorKind { Topic, ParentComment, Referenced };

struct StanceEvidence {
  std::optional<std::pair<std::string, StanceLabel>> explicit_marker;  // (marker, direction)
  double similarity = 0.0;
  double kb_entailment = 0.0;
  double rule_score = 0.0;
  double combined = 0.0;
  AnchorKind anchor = AnchorKind::Topic;
  std::string anchor_id;  // topic id or comment id
  bool mention_fallback_flag = false;  // @-mention matched nobody
};

struct StanceResult {
  std::string comment_id;
  StanceLabel label = StanceLabel::Neutral;
  StanceEvidence evidence;
};

struct StanceConfig {
  double w_similarity = 0.4;
  double w_kb = 0.4;
  double w_rule = 0.2;
  double tau = 0.15;        // top-level neutral band
  double tau_reply = 0.3;   // reply similarity-to-anchor band
  StanceLexicons lexicons = StanceLexicons::defaults();
};

// First matching agreement/disagreement phrase; disagreement is checked first
// ("disagree" contains "agree").
std::optional<std::pair<std::string, StanceLabel>> detect_explicit(
    std::string_view comment_text, const StanceLexicons& lexicons);

// Cosine of the comment against the topic-representation embedding.
double similarity_signal(const EmbeddingVector& comment, const EmbeddingVector& topic);

struct EmptyKbError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Best-matching claim by |cosine|: cosine x polarity sign x negation factor.
double kb_entailment(std::string_view comment_text, const EmbeddingVector& comment,
                     const KnowledgeBase& kb, const std::vector<std::string>& negations,
                     const std::vector<std::string>& stopwords);

// Additive linguistic sub-scores in [-1,1]: keyword echo, negation near a topic
// keyword, antonym near a keyword, punctuation runs and uppercase emphasis
// amplifying the accumulated sign.
double rule_signal(std::string_view comment_text, const std::vector<std::string>& topic_keywords,
                   const StanceConfig& config);

struct TopicContext {
  int topic_id = -1;
  std::vector<std::string> keywords;  // top phrases
  EmbeddingVector representation;     // embedding of concatenated top keywords

  static TopicContext from_cluster(const TopicCluster& cluster, const EmbeddingBackend& backend);
};

StanceResult detect_stance_toplevel(const Comment& comment, const EmbeddingBackend& backend,
                                    const TopicContext& topic, const KnowledgeBase* kb,
                                    const StanceConfig& config);

// Replies processed in temporal order (ties by comment_id). Anchor is the
// referenced comment when the reply opens with a resolvable @-mention, else the
// parent; agree keeps the anchor's stance, disagree flips it, neutral falls
// back to the top-level detector.
std::vector<StanceResult> detect_stance_replies(const Comment& toplevel,
                                                std::vector<Comment> replies,
                                                const StanceResult& toplevel_result,
                                                const EmbeddingBackend& backend,
                                                const TopicContext& topic,
                                                const KnowledgeBase* kb,
                                                const StanceConfig& config);

struct ClassReport {
  struct Row {
    StanceLabel label;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    std::size_t support = 0;
  };
  std::vector<Row> rows;  // Against, Favour
  double accuracy = 0.0;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::size_t total = 0;

  std::string format() const;  // classification-report table layout
};

// Gold labels are Favour/Against; Neutral predictions count as errors.
ClassReport evaluate_stance(const std::map<std::string, StanceLabel>& predictions,
                            const std::map<std::string, StanceLabel>& gold);

struct StanceSummary {
  struct Row {
    Category category;
    std::map<StanceLabel, double> share;  // sums to 1 when non-empty
    std::size_t total = 0;
    bool empty_flag = false;
  };
  std::vector<Row> rows;
};

StanceSummary stance_summary(const Corpus& corpus, const std::vector<StanceResult>& results);

// Corpus-wide pass: assigns each comment its video's topic, runs the two-stage
// top-level detector and reply propagation per thread.
std::vector<StanceResult> detect_stance_corpus(const Corpus& corpus,
                                               const TopicModelReport& topics,
                                               const EmbeddingBackend& backend,
                                               const std::map<int, KnowledgeBase>& kbs,
                                               const StanceConfig& config);

}  // namespace engage
