#include "engage/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_map>

#include "engage/text.hpp"

namespace engage {

namespace {

constexpr double kAccuracyFloor = 1e-3;

bool contains_phrase(std::string_view text, const std::vector<std::string>& phrases) {
  for (const auto& p : phrases) {
    if (text::ifind(text, p) != std::string_view::npos) return true;
  }
  return false;
}

bool in_set(const std::string& token, const std::vector<std::string>& entries) {
  return std::find(entries.begin(), entries.end(), token) != entries.end();
}

}  // namespace

FilterLexicons FilterLexicons::defaults() {
  FilterLexicons lx;
  lx.promo_phrases = {
      "subscribe",      "donate",          "like and subscribe", "smash that like",
      "hit the bell",   "giveaway",        "promo code",         "use my code",
      "free gift",      "click the link",  "link in bio",        "link in description",
      "turn on notifications"};
  lx.self_promo_phrases = {
      "check out my channel", "support my channel", "sub to my channel", "sub4sub",
      "sub 4 sub",            "follow me",          "check out my",      "visit my channel",
      "subscribe to my",      "plz subscribe",      "please subscribe",  "my new video"};
  lx.ambiguous_shorts = {"lol",  "haha", "hahaha", "lmao", "lmfao", "rofl", "omg",
                         "wow",  "hmm",  "hmmm",   "meh",  "bruh",  "oof",  "xd",
                         "wtf",  "idk",  "k",      "kk",   "yo",    "sup",  "first"};
  lx.meaningful_shorts = {"agree",       "i agree",    "agreed",     "disagree", "i disagree",
                          "great point", "good point", "thank you",  "thanks",   "well said",
                          "so true",     "true",       "exactly",    "facts",    "spot on",
                          "well done",   "great video"};
  return lx;
}

FilterLexicons FilterLexicons::from_file(const std::filesystem::path& path) {
  // Sections switch on lines "[promo]", "[self_promo]", "[ambiguous]", "[meaningful]".
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon config: " + path.string());
  FilterLexicons lx;
  std::vector<std::string>* target = &lx.promo_phrases;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = text::trim(line);
    if (t.empty()) continue;
    if (t == "[promo]") target = &lx.promo_phrases;
    else if (t == "[self_promo]") target = &lx.self_promo_phrases;
    else if (t == "[ambiguous]") target = &lx.ambiguous_shorts;
    else if (t == "[meaningful]") target = &lx.meaningful_shorts;
    else target->push_back(text::to_lower(t));
  }
  return lx;
}

std::vector<std::string> label_function_ids() {
  return {"LF_single_char_or_emoji", "LF_url_only",       "LF_promo_phrase",
          "LF_ambiguous_short",      "LF_self_promo",     "LF_repeated_token",
          "LF_meaningful_short",     "LF_link_heavy"};
}

std::vector<LabelVote> apply_label_functions(std::string_view comment_text,
                                             const FilterLexicons& lx) {
  std::string trimmed = text::trim(comment_text);
  std::string lower = text::to_lower(trimmed);
  auto tokens = text::tokenize_lower(trimmed);
  std::size_t url_tokens = 0, url_chars = 0;
  std::size_t word_tokens = 0;
  for (const auto& t : tokens) {
    if (text::is_url_token(t)) {
      ++url_tokens;
      url_chars += t.size();
    } else {
      ++word_tokens;
    }
  }

  std::vector<LabelVote> votes;
  auto vote = [&](const char* id, Vote v) { votes.push_back({id, v}); };

  // (i) single characters or emojis without semantic content
  {
    Vote v = Vote::Abstain;
    std::string nonws;
    for (char c : trimmed) {
      if (!std::isspace(static_cast<unsigned char>(c))) nonws += c;
    }
    std::size_t cps = text::codepoint_count(nonws);
    bool any_alnum = std::any_of(nonws.begin(), nonws.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c));
    });
    if (trimmed.empty() || cps == 1 || (!any_alnum && cps < 4)) v = Vote::Irrelevant;
    vote("LF_single_char_or_emoji", v);
  }

  // (ii) standalone URLs
  vote("LF_url_only", url_tokens >= 1 && word_tokens < 2 ? Vote::Irrelevant : Vote::Abstain);

  // (ii) promotional phrases
  vote("LF_promo_phrase",
       contains_phrase(lower, lx.promo_phrases) ? Vote::Irrelevant : Vote::Abstain);

  // (iii) ambiguous short expressions
  {
    bool fire = !tokens.empty() && tokens.size() <= 2 &&
                std::all_of(tokens.begin(), tokens.end(),
                            [&](const std::string& t) { return in_set(t, lx.ambiguous_shorts); });
    vote("LF_ambiguous_short", fire ? Vote::Irrelevant : Vote::Abstain);
  }

  // (iv) spam / self-promotion requests
  vote("LF_self_promo",
       contains_phrase(lower, lx.self_promo_phrases) ? Vote::Irrelevant : Vote::Abstain);

  // repeated-token spam
  {
    std::set<std::string> uniq(tokens.begin(), tokens.end());
    bool fire = tokens.size() >= 3 && uniq.size() * 3 <= tokens.size();
    vote("LF_repeated_token", fire ? Vote::Irrelevant : Vote::Abstain);
  }

  // short but contextually meaningful comments are retained
  {
    bool fire = !tokens.empty() && tokens.size() <= 4 && in_set(lower, lx.meaningful_shorts);
    vote("LF_meaningful_short", fire ? Vote::Relevant : Vote::Abstain);
  }

  // link-heavy content
  {
    bool fire = url_tokens >= 2 ||
                (url_tokens >= 1 && !trimmed.empty() && url_chars * 2 > trimmed.size());
    vote("LF_link_heavy", fire ? Vote::Irrelevant : Vote::Abstain);
  }

  return votes;
}

VoteMatrix VoteMatrix::from_texts(const std::vector<std::string>& texts,
                                  const FilterLexicons& lexicons) {
  VoteMatrix m;
  m.function_ids = label_function_ids();
  m.rows.reserve(texts.size());
  for (const auto& t : texts) {
    auto votes = apply_label_functions(t, lexicons);
    std::vector<Vote> row;
    row.reserve(votes.size());
    for (const auto& v : votes) row.push_back(v.vote);
    m.rows.push_back(std::move(row));
  }
  return m;
}

double LabelModel::posterior(const std::vector<Vote>& row) const {
  std::size_t n_irr = 0, n_rel = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j < active.size() && !active[j]) continue;
    if (row[j] == Vote::Irrelevant) ++n_irr;
    else if (row[j] == Vote::Relevant) ++n_rel;
  }
  if (n_irr + n_rel == 0) return prior;
  if (mode == Mode::MajorityVote) {
    return static_cast<double>(n_irr) / static_cast<double>(n_irr + n_rel);
  }
  double log_irr = std::log(prior), log_rel = std::log(1.0 - prior);
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j < active.size() && !active[j]) continue;
    if (row[j] == Vote::Abstain) continue;
    double a = accuracies[j];
    if (row[j] == Vote::Irrelevant) {
      log_irr += std::log(a);
      log_rel += std::log(1.0 - a);
    } else {
      log_irr += std::log(1.0 - a);
      log_rel += std::log(a);
    }
  }
  double m = std::max(log_irr, log_rel);
  double num = std::exp(log_irr - m);
  return num / (num + std::exp(log_rel - m));
}

namespace {

// Beta(3, 1.25) pseudo-counts on each accuracy: 2 extra "correct" votes over
// 2.25 extra votes total. Keeps functions that fire on only a handful of rows
// from being dragged to a degenerate estimate.
constexpr double kPseudoCorrect = 2.0;
constexpr double kPseudoTotal = 2.25;

// The training objective: data log-likelihood plus the accuracy log-prior.
double label_model_loglik(const LabelModel& model, const VoteMatrix& votes) {
  double ll = 0.0;
  for (std::size_t j = 0; j < model.accuracies.size(); ++j) {
    if (j < model.active.size() && !model.active[j]) continue;
    ll += kPseudoCorrect * std::log(model.accuracies[j]) +
          (kPseudoTotal - kPseudoCorrect) * std::log(1.0 - model.accuracies[j]);
  }
  for (const auto& row : votes.rows) {
    double log_irr = std::log(model.prior), log_rel = std::log(1.0 - model.prior);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!model.active[j] || row[j] == Vote::Abstain) continue;
      double a = model.accuracies[j];
      if (row[j] == Vote::Irrelevant) {
        log_irr += std::log(a);
        log_rel += std::log(1.0 - a);
      } else {
        log_irr += std::log(1.0 - a);
        log_rel += std::log(a);
      }
    }
    double m = std::max(log_irr, log_rel);
    ll += m + std::log(std::exp(log_irr - m) + std::exp(log_rel - m));
  }
  return ll;
}

}  // namespace

LabelModel fit_label_model(const VoteMatrix& votes, const LabelModelConfig& config) {
  const std::size_t n_fn = votes.function_ids.size();
  LabelModel model;
  model.accuracies.assign(n_fn, 0.7);
  model.active.assign(n_fn, false);
  model.prior = config.prior;

  std::size_t non_abstaining = 0;
  for (std::size_t j = 0; j < n_fn; ++j) {
    for (const auto& row : votes.rows) {
      if (row[j] != Vote::Abstain) {
        model.active[j] = true;
        break;
      }
    }
    if (model.active[j]) ++non_abstaining;
  }
  if (non_abstaining < 2)
    throw std::invalid_argument("label model needs >= 2 non-abstaining functions");

  if (votes.rows.size() < config.min_rows_for_em) {
    model.mode = LabelModel::Mode::MajorityVote;
    return model;
  }

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < config.max_iterations; ++iter) {
    double ll = label_model_loglik(model, votes);
    if (ll < prev_ll) break;  // clamping can stall progress; keep the better state
    model.loglik_trace.push_back(ll);
    if (ll - prev_ll < config.tolerance && iter > 0) break;
    prev_ll = ll;

    // E-step
    std::vector<double> post(votes.rows.size());
    for (std::size_t i = 0; i < votes.rows.size(); ++i)
      post[i] = model.posterior(votes.rows[i]);

    // M-step over the accuracies only; the class balance stays fixed
    LabelModel next = model;
    for (std::size_t j = 0; j < n_fn; ++j) {
      if (!model.active[j]) continue;
      double correct = 0.0, total = 0.0;
      for (std::size_t i = 0; i < votes.rows.size(); ++i) {
        Vote v = votes.rows[i][j];
        if (v == Vote::Abstain) continue;
        total += 1.0;
        correct += v == Vote::Irrelevant ? post[i] : 1.0 - post[i];
      }
      if (total > 0)
        next.accuracies[j] = std::clamp((correct + kPseudoCorrect) / (total + kPseudoTotal),
                                        kAccuracyFloor, 1.0 - kAccuracyFloor);
    }
    double next_ll = label_model_loglik(next, votes);
    if (next_ll < ll) break;  // projection onto the clamp box reduced it; stop
    auto trace = std::move(model.loglik_trace);
    model = std::move(next);
    model.loglik_trace = std::move(trace);
  }
  return model;
}

std::vector<double> probabilistic_labels(const LabelModel& model, const VoteMatrix& votes) {
  std::vector<double> out;
  out.reserve(votes.rows.size());
  for (const auto& row : votes.rows) out.push_back(model.posterior(row));
  return out;
}

namespace {

std::vector<std::pair<std::uint32_t, float>> hashed_features(std::string_view input) {
  std::string lower = text::to_lower(text::trim(input));
  auto tokens = text::tokenize(lower);
  std::unordered_map<std::uint32_t, float> counts;
  auto add = [&](std::string_view f, std::uint64_t seed) {
    counts[static_cast<std::uint32_t>(text::fnv1a(f, seed) %
                                      DiscriminativeClassifier::kBuckets)] += 1.0f;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i], 0x11);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1], 0x22);
  }
  // char 3-5 grams over the whitespace-collapsed text
  std::string collapsed;
  for (char c : lower) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!collapsed.empty() && collapsed.back() != ' ') collapsed += ' ';
    } else {
      collapsed += c;
    }
  }
  for (std::size_t n = 3; n <= 5; ++n) {
    if (collapsed.size() < n) break;
    for (std::size_t i = 0; i + n <= collapsed.size(); ++i)
      add(std::string_view(collapsed).substr(i, n), 0x33 + n);
  }
  std::vector<std::pair<std::uint32_t, float>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  double norm = 0.0;
  for (auto& [k, v] : out) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0)
    for (auto& [k, v] : out) v = static_cast<float>(v / norm);
  return out;
}

}  // namespace

double DiscriminativeClassifier::predict(std::string_view comment_text) const {
  double z = bias_;
  for (const auto& [k, v] : hashed_features(comment_text)) z += weights_[k] * v;
  return 1.0 / (1.0 + std::exp(-z));
}

DiscriminativeClassifier train_discriminative(const std::vector<std::string>& texts,
                                              const std::vector<double>& soft_labels) {
  if (texts.size() != soft_labels.size())
    throw std::invalid_argument("texts/labels size mismatch");
  if (texts.size() < 100)
    throw std::invalid_argument("need >= 100 training texts; use the label model alone");
  auto [mn, mx] = std::minmax_element(soft_labels.begin(), soft_labels.end());
  if (*mx - *mn < 1e-9)
    throw DegenerateLabelsError("all soft labels identical; training refused");

  std::vector<std::vector<std::pair<std::uint32_t, float>>> feats;
  feats.reserve(texts.size());
  for (const auto& t : texts) feats.push_back(hashed_features(t));

  DiscriminativeClassifier clf;
  const std::size_t epochs = 15;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    double lr = 0.5 / (1.0 + 0.3 * static_cast<double>(epoch));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      double z = clf.bias_;
      for (const auto& [k, v] : feats[i]) z += clf.weights_[k] * v;
      double p = 1.0 / (1.0 + std::exp(-z));
      double grad = p - soft_labels[i];
      clf.bias_ -= lr * grad;
      for (const auto& [k, v] : feats[i])
        clf.weights_[k] -= static_cast<float>(lr * grad * v);
    }
  }
  return clf;
}

void DiscriminativeClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write classifier: " + path.string());
  out.write("ENGCLF01", 8);
  double b = bias_;
  out.write(reinterpret_cast<const char*>(&b), sizeof b);
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(float)));
}

DiscriminativeClassifier DiscriminativeClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read classifier: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "ENGCLF01", 8) != 0) throw std::runtime_error("bad classifier file");
  DiscriminativeClassifier clf;
  in.read(reinterpret_cast<char*>(&clf.bias_), sizeof clf.bias_);
  in.read(reinterpret_cast<char*>(clf.weights_.data()),
          static_cast<std::streamsize>(clf.weights_.size() * sizeof(float)));
  if (!in) throw std::runtime_error("truncated classifier file");
  return clf;
}

double FilterModel::score(std::string_view comment_text) const {
  if (classifier) return classifier->predict(comment_text);
  auto votes = apply_label_functions(comment_text, lexicons);
  std::vector<Vote> row;
  row.reserve(votes.size());
  for (const auto& v : votes) row.push_back(v.vote);
  return label_model.posterior(row);
}

FilterModel FilterModel::fit(const std::vector<std::string>& texts,
                             const FilterLexicons& lexicons) {
  FilterModel model;
  model.lexicons = lexicons;
  auto votes = VoteMatrix::from_texts(texts, lexicons);
  model.label_model = fit_label_model(votes);
  if (texts.size() >= 100) {
    auto labels = probabilistic_labels(model.label_model, votes);
    try {
      model.classifier = train_discriminative(texts, labels);
    } catch (const DegenerateLabelsError&) {
      // label-model fallback
    }
  }
  return model;
}

FilterOutput filter_corpus(const Corpus& corpus, const FilterModel& model, double threshold) {
  FilterOutput out;
  out.kept = corpus;
  std::vector<Comment> kept_comments;
  kept_comments.reserve(corpus.comments.size());
  for (const auto& c : corpus.comments) {
    FilterVerdict v;
    v.comment_id = c.comment_id;
    v.votes = apply_label_functions(c.text, model.lexicons);
    v.p_irrelevant = model.score(c.text);
    v.drop = v.p_irrelevant >= threshold;
    if (v.drop) {
      out.dropped.push_back(std::move(v));
    } else {
      kept_comments.push_back(c);
    }
  }
  out.kept.comments = std::move(kept_comments);
  out.kept.rebuild_index();
  return out;
}

}  // namespace engage
