#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "engage/filter.hpp"
#include "fixtures.hpp"

using namespace engage;

namespace {

Vote vote_of(const std::vector<LabelVote>& votes, const std::string& fn) {
  for (const auto& v : votes)
    if (v.function_id == fn) return v.vote;
  FAIL("missing function ", fn);
  return Vote::Abstain;
}

// Vote matrix with a planted true label per row: each function votes correctly
// with its own probability, abstains with rate `abstain`.
struct SyntheticVotes {
  VoteMatrix matrix;
  std::vector<int> truth;  // 1 = irrelevant
};

SyntheticVotes sample_votes(std::size_t rows, const std::vector<double>& accuracies,
                            double abstain, std::uint64_t seed) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticVotes out;
  for (std::size_t f = 0; f < accuracies.size(); ++f)
    out.matrix.function_ids.push_back("lf" + std::to_string(f));
  for (std::size_t r = 0; r < rows; ++r) {
    int truth = unit(rng) < 0.5 ? 1 : 0;
    out.truth.push_back(truth);
    std::vector<Vote> row;
    for (double acc : accuracies) {
      if (unit(rng) < abstain) {
        row.push_back(Vote::Abstain);
      } else {
        bool correct = unit(rng) < acc;
        int said = correct ? truth : 1 - truth;
        row.push_back(said == 1 ? Vote::Irrelevant : Vote::Relevant);
      }
    }
    out.matrix.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace

TEST_CASE("label functions hit the documented patterns") {
  FilterLexicons lex = FilterLexicons::defaults();

  SUBCASE("standalone URL") {
    auto votes = apply_label_functions("http://x.co", lex);
    CHECK(vote_of(votes, "LF_url_only") == Vote::Irrelevant);
    // no function calls a bare URL relevant
    for (const auto& v : votes) CHECK(v.vote != Vote::Relevant);
  }
  SUBCASE("ambiguous short expression") {
    CHECK(vote_of(apply_label_functions("lol", lex), "LF_ambiguous_short") == Vote::Irrelevant);
  }
  SUBCASE("meaningful short whitelist") {
    CHECK(vote_of(apply_label_functions("agree", lex), "LF_meaningful_short") == Vote::Relevant);
    CHECK(vote_of(apply_label_functions("thank you", lex), "LF_meaningful_short") ==
          Vote::Relevant);
  }
  SUBCASE("empty and single-codepoint text") {
    CHECK(vote_of(apply_label_functions("", lex), "LF_single_char_or_emoji") ==
          Vote::Irrelevant);
    CHECK(vote_of(apply_label_functions("\xF0\x9F\x91\x8D", lex), "LF_single_char_or_emoji") ==
          Vote::Irrelevant);
  }
  SUBCASE("repeated token spam") {
    CHECK(vote_of(apply_label_functions("spam spam spam spam spam spam", lex),
                  "LF_repeated_token") == Vote::Irrelevant);
  }
  SUBCASE("purity: identical input gives identical votes") {
    auto a = apply_label_functions("check my channel for more", lex);
    auto b = apply_label_functions("check my channel for more", lex);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].function_id == b[i].function_id);
      CHECK(a[i].vote == b[i].vote);
    }
  }
}

TEST_CASE("lexicons load from sectioned config files") {
  fixtures::TempDir tmp;
  {
    std::ofstream out(tmp / "lex.txt");
    out << "# test lexicons\n[promo]\nbuy now\n[ambiguous]\nmeh\n[meaningful]\nagree\n"
        << "[self_promo]\ncheck my channel\n";
  }
  FilterLexicons lex = FilterLexicons::from_file(tmp / "lex.txt");
  CHECK(lex.promo_phrases == std::vector<std::string>{"buy now"});
  CHECK(lex.ambiguous_shorts == std::vector<std::string>{"meh"});
  CHECK(lex.meaningful_shorts == std::vector<std::string>{"agree"});
  CHECK(lex.self_promo_phrases == std::vector<std::string>{"check my channel"});
}

TEST_CASE("EM: unanimous functions earn near-perfect accuracies") {
  VoteMatrix m;
  m.function_ids = {"a", "b", "c"};
  std::mt19937_64 rng{7};
  for (int r = 0; r < 50; ++r) {
    Vote v = (rng() & 1) ? Vote::Irrelevant : Vote::Relevant;
    m.rows.push_back({v, v, v});
  }
  LabelModel model = fit_label_model(m);
  REQUIRE(model.mode == LabelModel::Mode::Em);
  for (std::size_t f = 0; f < 3; ++f) {
    REQUIRE(model.active[f]);
    CHECK(model.accuracies[f] >= 0.99);
  }
}

TEST_CASE("EM: an anti-correlated function gets accuracy below 0.5") {
  VoteMatrix m;
  m.function_ids = {"good1", "good2", "contrarian"};
  std::mt19937_64 rng{11};
  for (int r = 0; r < 60; ++r) {
    Vote v = (rng() & 1) ? Vote::Irrelevant : Vote::Relevant;
    Vote anti = v == Vote::Irrelevant ? Vote::Relevant : Vote::Irrelevant;
    m.rows.push_back({v, v, anti});
  }
  LabelModel model = fit_label_model(m);
  CHECK(model.accuracies[0] > 0.5);
  CHECK(model.accuracies[1] > 0.5);
  CHECK(model.accuracies[2] < 0.5);
}

TEST_CASE("EM log-likelihood trace is non-decreasing") {
  auto synth = sample_votes(120, {0.9, 0.8, 0.7, 0.6}, 0.2, 42);
  LabelModel model = fit_label_model(synth.matrix);
  REQUIRE(model.loglik_trace.size() >= 1);
  for (std::size_t i = 1; i < model.loglik_trace.size(); ++i) {
    CHECK(model.loglik_trace[i] >= model.loglik_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("always-abstaining function is excluded; fewer than 2 voters is an error") {
  VoteMatrix m;
  m.function_ids = {"a", "b", "mute"};
  for (int r = 0; r < 20; ++r)
    m.rows.push_back({Vote::Irrelevant, Vote::Irrelevant, Vote::Abstain});
  LabelModel model = fit_label_model(m);
  CHECK_FALSE(model.active[2]);

  VoteMatrix bad;
  bad.function_ids = {"a", "mute"};
  for (int r = 0; r < 20; ++r) bad.rows.push_back({Vote::Irrelevant, Vote::Abstain});
  CHECK_THROWS_AS(fit_label_model(bad), std::invalid_argument);
}

TEST_CASE("majority-vote fallback below the row minimum") {
  VoteMatrix m;
  m.function_ids = {"a", "b", "c"};
  m.rows.push_back({Vote::Irrelevant, Vote::Irrelevant, Vote::Relevant});
  LabelModel model = fit_label_model(m);
  CHECK(model.mode == LabelModel::Mode::MajorityVote);
  CHECK(model.posterior(m.rows[0]) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("posterior: prior passthrough and hand-computed Bayes") {
  LabelModel model;
  model.mode = LabelModel::Mode::Em;
  model.accuracies = {0.9, 0.9, 0.9};
  model.active = {true, true, true};
  model.prior = 0.5;

  SUBCASE("all-Abstain row returns the prior") {
    CHECK(model.posterior({Vote::Abstain, Vote::Abstain, Vote::Abstain}) ==
          doctest::Approx(0.5));
  }
  SUBCASE("unanimous irrelevant, oracle by independent Bayes computation") {
    // oracle: p = prior*acc^3 / (prior*acc^3 + (1-prior)*(1-acc)^3)
    double num = 0.5 * 0.9 * 0.9 * 0.9;
    double den = num + 0.5 * 0.1 * 0.1 * 0.1;
    double oracle = num / den;
    CHECK(oracle == doctest::Approx(0.99863).epsilon(1e-4));  // spec figure
    CHECK(model.posterior({Vote::Irrelevant, Vote::Irrelevant, Vote::Irrelevant}) ==
          doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("unanimous relevant is the mirror image") {
    CHECK(model.posterior({Vote::Relevant, Vote::Relevant, Vote::Relevant}) ==
          doctest::Approx(1.0 - 0.99863).epsilon(1e-3));
  }
}

TEST_CASE("posterior symmetry: flipping votes and prior flips the posterior") {
  auto synth = sample_votes(40, {0.85, 0.7, 0.65}, 0.25, 5);
  LabelModel model;
  model.mode = LabelModel::Mode::Em;
  model.accuracies = {0.85, 0.7, 0.65};
  model.active = {true, true, true};
  model.prior = 0.37;

  LabelModel flipped = model;
  flipped.prior = 1.0 - model.prior;

  for (const auto& row : synth.matrix.rows) {
    std::vector<Vote> inverse;
    for (Vote v : row) {
      inverse.push_back(v == Vote::Abstain ? Vote::Abstain
                        : v == Vote::Irrelevant ? Vote::Relevant
                                                : Vote::Irrelevant);
    }
    CHECK(model.posterior(row) ==
          doctest::Approx(1.0 - flipped.posterior(inverse)).epsilon(1e-9));
  }
}

TEST_CASE("equal-accuracy posterior ordering matches net-majority ordering") {
  // With equal accuracies the posterior is monotone in (#Irrelevant - #Relevant).
  LabelModel model;
  model.mode = LabelModel::Mode::Em;
  model.accuracies = std::vector<double>(8, 0.8);
  model.active = std::vector<bool>(8, true);
  model.prior = 0.5;

  std::mt19937_64 rng{17};
  std::uniform_int_distribution<int> pick(0, 2);
  std::vector<std::pair<int, double>> rows;  // (net majority, posterior)
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vote> row;
    int net = 0;
    for (int f = 0; f < 8; ++f) {
      int v = pick(rng);
      row.push_back(v == 0 ? Vote::Irrelevant : v == 1 ? Vote::Relevant : Vote::Abstain);
      net += v == 0 ? 1 : v == 1 ? -1 : 0;
    }
    rows.emplace_back(net, model.posterior(row));
  }
  for (const auto& [na, pa] : rows) {
    for (const auto& [nb, pb] : rows) {
      if (na > nb) CHECK(pa > pb - 1e-12);
      if (na == nb) CHECK(pa == doctest::Approx(pb).epsilon(1e-9));
    }
  }
}

TEST_CASE("EM recovers planted accuracy ordering on a larger matrix") {
  auto synth = sample_votes(400, {0.95, 0.75, 0.55}, 0.1, 1234);
  LabelModelConfig config;
  config.prior = 0.5;  // the generator plants balanced classes
  LabelModel model = fit_label_model(synth.matrix, config);
  CHECK(model.accuracies[0] > model.accuracies[1]);
  CHECK(model.accuracies[1] > model.accuracies[2]);
}

TEST_CASE("train_discriminative generalizes to unseen URL variants") {
  std::vector<std::string> texts;
  std::vector<double> labels;
  std::mt19937_64 rng{77};
  for (int i = 0; i < 100; ++i) {
    texts.push_back("http://spam" + std::to_string(i) + ".example visit now");
    labels.push_back(0.95);
    texts.push_back(fixtures::random_sentence(rng, 8));
    labels.push_back(0.05);
  }
  auto clf = train_discriminative(texts, labels);
  CHECK(clf.predict("hxxp://promo.site visit now") > 0.5);
  CHECK(clf.predict("people question the public record today") < 0.5);
}

TEST_CASE("train_discriminative refuses degenerate labels and tiny sets") {
  std::vector<std::string> texts(150, "same text");
  for (int i = 0; i < 150; ++i) texts[i] = "text number " + std::to_string(i);
  std::vector<double> flat(150, 0.5);
  CHECK_THROWS_AS(train_discriminative(texts, flat), DegenerateLabelsError);

  std::vector<std::string> few(texts.begin(), texts.begin() + 50);
  std::vector<double> few_labels(50, 0.0);
  few_labels[0] = 1.0;
  CHECK_THROWS_AS(train_discriminative(few, few_labels), std::invalid_argument);
}

TEST_CASE("classifier save/load round-trip preserves predictions") {
  std::vector<std::string> texts;
  std::vector<double> labels;
  for (int i = 0; i < 120; ++i) {
    texts.push_back(i % 2 ? "buy followers now http://x.co" + std::to_string(i)
                          : "a thoughtful remark about the video " + std::to_string(i));
    labels.push_back(i % 2 ? 0.9 : 0.1);
  }
  auto clf = train_discriminative(texts, labels);
  fixtures::TempDir tmp;
  clf.save(tmp / "clf.bin");
  auto loaded = DiscriminativeClassifier::load(tmp / "clf.bin");
  for (const char* probe : {"buy followers now", "a thoughtful remark", "unrelated words"}) {
    CHECK(clf.predict(probe) == doctest::Approx(loaded.predict(probe)).epsilon(1e-12));
  }
}

TEST_CASE("filter_corpus thresholds and partition") {
  using fixtures::make_comment;
  using fixtures::make_video;
  Corpus corpus;
  corpus.videos = {make_video("v1")};
  const char* samples[10] = {"http://spam.example",      "lol",
                             "agree",                    "this video raises real questions",
                             "sub4sub check my channel", "k",
                             "!!!",                      "I watched this twice, great analysis",
                             "www.promo.example now",    "the argument at minute two is wrong"};
  for (int i = 0; i < 10; ++i)
    corpus.comments.push_back(
        make_comment("c" + std::to_string(i), "v1", "u" + std::to_string(i), samples[i]));
  corpus.rebuild_index();

  std::vector<std::string> texts;
  for (const auto& c : corpus.comments) texts.push_back(c.text);
  FilterModel model = FilterModel::fit(texts, FilterLexicons::defaults());

  SUBCASE("threshold 1.0+ keeps everything; 0.0 drops everything") {
    FilterOutput all_kept = filter_corpus(corpus, model, 1.000001);
    CHECK(all_kept.kept.comments.size() == 10);
    CHECK(all_kept.dropped.empty());

    FilterOutput none_kept = filter_corpus(corpus, model, 0.0);
    CHECK(none_kept.kept.comments.empty());
    CHECK(none_kept.dropped.size() == 10);
  }
  SUBCASE("partition matches per-comment verdicts recomputed independently") {
    FilterOutput out = filter_corpus(corpus, model, 0.5);
    CHECK(out.kept.comments.size() + out.dropped.size() == 10);
    std::set<std::string> kept_ids, dropped_ids;
    for (const auto& c : out.kept.comments) kept_ids.insert(c.comment_id);
    for (const auto& v : out.dropped) dropped_ids.insert(v.comment_id);
    for (const auto& id : kept_ids) CHECK(dropped_ids.count(id) == 0);
    // oracle: rescore each comment directly
    for (const auto& c : corpus.comments) {
      bool dropped = dropped_ids.count(c.comment_id) > 0;
      CHECK(dropped == (model.score(c.text) >= 0.5));
    }
    // every dropped verdict carries the vote trace
    for (const auto& v : out.dropped) CHECK(v.votes.size() == label_function_ids().size());
  }
}
