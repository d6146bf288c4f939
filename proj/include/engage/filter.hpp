#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "engage/corpus.hpp"

namespace engage {

enum class Vote : std::uint8_t { Irrelevant, Relevant, Abstain };

struct LabelVote {
  std::string function_id;
  Vote vote = Vote::Abstain;
};

struct FilterLexicons {
  std::vector<std::string> promo_phrases;
  std::vector<std::string> self_promo_phrases;
  std::vector<std::string> ambiguous_shorts;
  std::vector<std::string> meaningful_shorts;

  static FilterLexicons defaults();
  static FilterLexicons from_file(const std::filesystem::path& path);
};

// Deterministic votes from the fixed set of labelling functions, in a fixed
// order: LF_single_char_or_emoji, LF_url_only, LF_promo_phrase,
// LF_ambiguous_short, LF_self_promo, LF_repeated_token, LF_meaningful_short,
// LF_link_heavy.
std::vector<LabelVote> apply_label_functions(std::string_view comment_text,
                                             const FilterLexicons& lexicons);

std::vector<std::string> label_function_ids();

struct VoteMatrix {
  std::vector<std::string> function_ids;
  std::vector<std::vector<Vote>> rows;  // rows x functions

  static VoteMatrix from_texts(const std::vector<std::string>& texts,
                               const FilterLexicons& lexicons);
};

struct LabelModel {
  enum class Mode { Em, MajorityVote };
  Mode mode = Mode::Em;
  std::vector<double> accuracies;   // per function, in (0,1)
  std::vector<bool> active;         // false for always-abstaining functions
  double prior = 0.5;               // P(irrelevant)
  std::vector<double> loglik_trace; // per EM iteration, non-decreasing

  double posterior(const std::vector<Vote>& row) const;
};

struct LabelModelConfig {
  double tolerance = 1e-6;
  std::size_t max_iterations = 100;
  std::size_t min_rows_for_em = 10;  // below this, majority-vote fallback
  // Class balance P(irrelevant). Held fixed during fitting: the labelling
  // functions are one-directional (each only ever votes one class), so a free
  // prior lets EM collapse into the "single class" optimum. 0.5 also keeps
  // functions whose votes never overlap anchored instead of decaying.
  double prior = 0.5;
};

// Two-class generative model (functions conditionally independent given the
// true label); per-function accuracies fit by MAP-EM with a mild Beta prior
// anchoring sparsely-voting functions. Requires >= 2 functions that ever vote.
LabelModel fit_label_model(const VoteMatrix& votes, const LabelModelConfig& config = {});

std::vector<double> probabilistic_labels(const LabelModel& model, const VoteMatrix& votes);

// Linear classifier over hashed word 1-2-gram and char 3-5-gram features,
// trained with probabilistic labels as soft targets.
class DiscriminativeClassifier {
 public:
  static constexpr std::size_t kBuckets = std::size_t{1} << 18;

  double predict(std::string_view comment_text) const;  // p_irrelevant

  void save(const std::filesystem::path& path) const;
  static DiscriminativeClassifier load(const std::filesystem::path& path);

  friend DiscriminativeClassifier train_discriminative(const std::vector<std::string>&,
                                                       const std::vector<double>&);

 private:
  std::vector<float> weights_ = std::vector<float>(kBuckets, 0.0f);
  double bias_ = 0.0;
};

struct DegenerateLabelsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws DegenerateLabelsError when all soft labels are identical and
// std::invalid_argument below 100 training texts.
DiscriminativeClassifier train_discriminative(const std::vector<std::string>& texts,
                                              const std::vector<double>& soft_labels);

struct FilterVerdict {
  std::string comment_id;
  double p_irrelevant = 0.0;
  bool drop = false;
  std::vector<LabelVote> votes;
};

// Label model + lexicons, optionally backed by a trained classifier.
struct FilterModel {
  FilterLexicons lexicons;
  LabelModel label_model;
  std::optional<DiscriminativeClassifier> classifier;

  double score(std::string_view comment_text) const;

  // Fits the label model on the corpus votes and, when the corpus is large
  // enough and labels are not degenerate, trains the classifier.
  static FilterModel fit(const std::vector<std::string>& texts, const FilterLexicons& lexicons);
};

struct FilterOutput {
  Corpus kept;
  std::vector<FilterVerdict> dropped;
};

// Exhaustive, exclusive partition; decision = Drop iff p_irrelevant >= threshold.
FilterOutput filter_corpus(const Corpus& corpus, const FilterModel& model, double threshold);

}  // namespace engage
