#include "engage/stance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "engage/text.hpp"

namespace engage {

std::string stance_name(StanceLabel s) {
  switch (s) {
    case StanceLabel::Favour: return "favour";
    case StanceLabel::Against: return "against";
    case StanceLabel::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<StanceLabel> parse_stance(std::string_view name) {
  if (name == "favour") return StanceLabel::Favour;
  if (name == "against") return StanceLabel::Against;
  if (name == "neutral") return StanceLabel::Neutral;
  return std::nullopt;
}

StanceLexicons StanceLexicons::defaults() {
  StanceLexicons lx;
  lx.disagreement_markers = {
      "disagree",     "you're wrong", "youre wrong",  "you are wrong", "that's false",
      "thats false",  "not true",     "nonsense",     "bullshit",      "rubbish",
      "debunked",     "stop lying",   "don't believe", "dont believe", "no way",
      "wrong",        "fake news",    "total lie",    "complete lie",  "garbage"};
  lx.agreement_markers = {
      "i agree",   "agree",        "exactly",     "well said",  "so true",
      "spot on",   "100%",         "absolutely right", "you're right", "youre right",
      "this is true", "facts",     "amen",        "preach",     "couldn't agree more",
      "great point"};
  lx.negations = {"not",   "no",    "never", "don't", "dont",  "isn't",  "isnt",
                  "can't", "cant",  "won't", "wont",  "wasn't","wasnt",  "didn't",
                  "didnt", "doesn't","doesnt","ain't", "aint",  "cannot", "nothing",
                  "nobody","neither","without","hardly"};
  lx.antonyms = {{"real", "hoax"},   {"true", "false"},  {"alive", "dead"},
                 {"flat", "round"},  {"hidden", "public"},{"secret", "open"},
                 {"guilty", "innocent"}, {"rigged", "fair"}};
  return lx;
}

std::optional<std::pair<std::string, StanceLabel>> detect_explicit(
    std::string_view comment_text, const StanceLexicons& lexicons) {
  std::string lower = text::to_lower(comment_text);
  for (const auto& m : lexicons.disagreement_markers) {
    if (text::ifind(lower, m) != std::string_view::npos)
      return std::make_pair(m, StanceLabel::Against);
  }
  for (const auto& m : lexicons.agreement_markers) {
    if (text::ifind(lower, m) != std::string_view::npos)
      return std::make_pair(m, StanceLabel::Favour);
  }
  return std::nullopt;
}

double similarity_signal(const EmbeddingVector& comment, const EmbeddingVector& topic) {
  if (comment.norm == 0.0 || topic.norm == 0.0) return 0.0;
  return cosine(comment, topic);
}

KnowledgeBase KnowledgeBase::from_file(const std::filesystem::path& path, int topic_id,
                                       const EmbeddingBackend& backend) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open KB file: " + path.string());
  KnowledgeBase kb;
  kb.topic_id = topic_id;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (text::trim(line).empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("malformed KB line: " + line);
    std::string pol = text::trim(line.substr(0, tab));
    Claim claim;
    claim.statement = text::trim(line.substr(tab + 1));
    if (pol == "S") claim.polarity = ClaimPolarity::SupportsNarrative;
    else if (pol == "C") claim.polarity = ClaimPolarity::ContradictsNarrative;
    else throw std::runtime_error("unknown claim polarity: " + pol);
    claim.embedding = backend.embed(claim.statement);
    kb.claims.push_back(std::move(claim));
  }
  if (kb.claims.empty()) throw std::runtime_error("empty KB file: " + path.string());
  return kb;
}

double kb_entailment(std::string_view comment_text, const EmbeddingVector& comment,
                     const KnowledgeBase& kb, const std::vector<std::string>& negations,
                     const std::vector<std::string>& stopwords) {
  if (kb.claims.empty()) throw EmptyKbError("knowledge base has no claims");
  const KnowledgeBase::Claim* best = nullptr;
  double best_cos = 0.0;
  for (const auto& claim : kb.claims) {
    double c = similarity_signal(comment, claim.embedding);
    if (!best || std::fabs(c) > std::fabs(best_cos)) {
      best = &claim;
      best_cos = c;
    }
  }
  std::set<std::string> stop(stopwords.begin(), stopwords.end());
  std::set<std::string> content;
  for (const auto& t : text::tokenize_lower(best->statement)) {
    if (!stop.count(t)) content.insert(t);
  }
  auto tokens = text::tokenize_lower(comment_text);
  std::vector<std::size_t> matched;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (content.count(tokens[i])) matched.push_back(i);
  }
  std::size_t neg_count = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (std::find(negations.begin(), negations.end(), tokens[i]) == negations.end()) continue;
    for (std::size_t m : matched) {
      std::size_t d = i > m ? i - m : m - i;
      if (d <= 3) {
        ++neg_count;
        break;
      }
    }
  }
  double neg_factor = neg_count % 2 == 1 ? -1.0 : 1.0;
  double pol = best->polarity == ClaimPolarity::SupportsNarrative ? 1.0 : -1.0;
  return best_cos * pol * neg_factor;
}

double rule_signal(std::string_view comment_text, const std::vector<std::string>& topic_keywords,
                   const StanceConfig& config) {
  std::set<std::string> kw_tokens;
  for (const auto& phrase : topic_keywords) {
    for (const auto& t : text::tokenize_lower(phrase)) kw_tokens.insert(t);
  }
  auto tokens = text::tokenize_lower(comment_text);
  std::vector<std::size_t> kw_positions;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (kw_tokens.count(tokens[i])) kw_positions.push_back(i);
  }

  auto near_keyword = [&](std::size_t i) {
    for (std::size_t k : kw_positions) {
      std::size_t d = i > k ? i - k : k - i;
      if (d > 0 && d <= 3) return true;
    }
    return false;
  };

  double score = 0.0;
  bool negation_fired = false, antonym_fired = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!negation_fired &&
        std::find(config.lexicons.negations.begin(), config.lexicons.negations.end(),
                  tokens[i]) != config.lexicons.negations.end() &&
        near_keyword(i)) {
      negation_fired = true;
    }
    if (!antonym_fired) {
      for (const auto& [a, b] : config.lexicons.antonyms) {
        bool is_antonym = (kw_tokens.count(a) && tokens[i] == b) ||
                          (kw_tokens.count(b) && tokens[i] == a);
        if (is_antonym && !kw_tokens.count(tokens[i]) && near_keyword(i)) {
          antonym_fired = true;
          break;
        }
      }
    }
  }
  if (negation_fired) score -= 0.5;
  if (antonym_fired) score -= 0.3;
  if (!negation_fired && !antonym_fired && !kw_positions.empty()) score += 0.3;  // plain echo

  if (score != 0.0) {
    double sign = score > 0 ? 1.0 : -1.0;
    // runs of >= 3 '!' or '?'
    std::size_t run = 0;
    bool intense = false;
    for (char c : comment_text) {
      if (c == '!' || c == '?') {
        if (++run >= 3) intense = true;
      } else {
        run = 0;
      }
    }
    if (intense) score += sign * 0.2;
    std::size_t letters = 0, uppers = 0;
    for (char c : comment_text) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        ++letters;
        if (std::isupper(static_cast<unsigned char>(c))) ++uppers;
      }
    }
    if (letters >= 10 && uppers * 10 >= letters * 6) score += sign * 0.2;
  }
  return std::clamp(score, -1.0, 1.0);
}

TopicContext TopicContext::from_cluster(const TopicCluster& cluster,
                                        const EmbeddingBackend& backend) {
  TopicContext ctx;
  ctx.topic_id = cluster.topic_id;
  std::string joined;
  std::size_t taken = 0;
  for (const auto& [phrase, score] : cluster.keywords) {
    ctx.keywords.push_back(phrase);
    if (!joined.empty()) joined += ' ';
    joined += phrase;
    if (++taken >= 10) break;
  }
  ctx.representation = joined.empty() ? EmbeddingVector{std::vector<double>(backend.dim(), 0.0), 0.0}
                                      : backend.embed(joined);
  return ctx;
}

StanceResult detect_stance_toplevel(const Comment& comment, const EmbeddingBackend& backend,
                                    const TopicContext& topic, const KnowledgeBase* kb,
                                    const StanceConfig& config) {
  StanceResult res;
  res.comment_id = comment.comment_id;
  res.evidence.anchor = AnchorKind::Topic;
  res.evidence.anchor_id = std::to_string(topic.topic_id);

  auto emb = backend.embed(comment.text);
  res.evidence.similarity = similarity_signal(emb, topic.representation);
  res.evidence.rule_score = rule_signal(comment.text, topic.keywords, config);

  double w_sim = config.w_similarity, w_kb = config.w_kb, w_rule = config.w_rule;
  if (kb && !kb->claims.empty()) {
    res.evidence.kb_entailment =
        kb_entailment(comment.text, emb, *kb, config.lexicons.negations, default_stopwords());
  } else {
    double rest = w_sim + w_rule;
    if (rest > 0) {
      w_sim /= rest;
      w_rule /= rest;
    }
    w_kb = 0.0;
  }
  res.evidence.combined = w_sim * res.evidence.similarity + w_kb * res.evidence.kb_entailment +
                          w_rule * res.evidence.rule_score;

  if (auto marker = detect_explicit(comment.text, config.lexicons)) {
    res.evidence.explicit_marker = marker;
    res.label = marker->second;
    return res;
  }
  if (res.evidence.combined > config.tau) res.label = StanceLabel::Favour;
  else if (res.evidence.combined < -config.tau) res.label = StanceLabel::Against;
  else res.label = StanceLabel::Neutral;
  return res;
}

namespace {

StanceLabel flip(StanceLabel s) {
  if (s == StanceLabel::Favour) return StanceLabel::Against;
  if (s == StanceLabel::Against) return StanceLabel::Favour;
  return StanceLabel::Neutral;
}

}  // namespace

std::vector<StanceResult> detect_stance_replies(const Comment& toplevel,
                                                std::vector<Comment> replies,
                                                const StanceResult& toplevel_result,
                                                const EmbeddingBackend& backend,
                                                const TopicContext& topic,
                                                const KnowledgeBase* kb,
                                                const StanceConfig& config) {
  std::sort(replies.begin(), replies.end(), [](const Comment& a, const Comment& b) {
    if (a.published_at != b.published_at) return a.published_at < b.published_at;
    return a.comment_id < b.comment_id;
  });

  struct Participant {
    std::string display_lower;
    std::string comment_id;
    StanceLabel label;
    EmbeddingVector embedding;
  };
  std::vector<Participant> thread;  // in temporal order, toplevel first
  thread.push_back({text::to_lower(toplevel.author_display), toplevel.comment_id,
                    toplevel_result.label, backend.embed(toplevel.text)});

  std::vector<StanceResult> out;
  for (const auto& reply : replies) {
    StanceResult res;
    res.comment_id = reply.comment_id;
    bool mention_fallback = false;

    const Participant* anchor = &thread.front();
    AnchorKind anchor_kind = AnchorKind::ParentComment;
    auto tokens = text::tokenize(reply.text);
    std::string raw_first;
    {
      // tokenize strips punctuation, so grab the raw first token for '@'
      std::string trimmed = text::trim(reply.text);
      auto ws = trimmed.find_first_of(" \t\r\n");
      raw_first = ws == std::string::npos ? trimmed : trimmed.substr(0, ws);
    }
    if (!raw_first.empty() && raw_first[0] == '@') {
      std::string mention = text::to_lower(raw_first.substr(1));
      while (!mention.empty() && std::ispunct(static_cast<unsigned char>(mention.back())))
        mention.pop_back();
      const Participant* found = nullptr;
      for (auto it = thread.rbegin(); it != thread.rend(); ++it) {  // most recent first
        if (!mention.empty() && it->display_lower.rfind(mention, 0) == 0) {
          found = &*it;
          break;
        }
      }
      if (found) {
        anchor = found;
        anchor_kind = found->comment_id == toplevel.comment_id ? AnchorKind::ParentComment
                                                               : AnchorKind::Referenced;
      } else {
        mention_fallback = true;
      }
    }

    auto reply_emb = backend.embed(reply.text);
    enum class Relation { Agree, Disagree, Neutral };
    Relation rel = Relation::Neutral;
    auto marker = detect_explicit(reply.text, config.lexicons);
    if (marker) {
      rel = marker->second == StanceLabel::Favour ? Relation::Agree : Relation::Disagree;
    } else {
      double sim = similarity_signal(reply_emb, anchor->embedding);
      if (sim > config.tau_reply) rel = Relation::Agree;
      else if (sim < -config.tau_reply) rel = Relation::Disagree;
    }

    if (anchor->label == StanceLabel::Neutral || rel == Relation::Neutral) {
      res = detect_stance_toplevel(reply, backend, topic, kb, config);
    } else {
      res.label = rel == Relation::Agree ? anchor->label : flip(anchor->label);
      res.evidence.explicit_marker = marker;
      res.evidence.similarity = similarity_signal(reply_emb, anchor->embedding);
    }
    res.evidence.anchor = anchor_kind;
    res.evidence.anchor_id = anchor->comment_id;
    res.evidence.mention_fallback_flag = mention_fallback;

    thread.push_back({text::to_lower(reply.author_display), reply.comment_id, res.label,
                      std::move(reply_emb)});
    out.push_back(std::move(res));
  }
  return out;
}

ClassReport evaluate_stance(const std::map<std::string, StanceLabel>& predictions,
                            const std::map<std::string, StanceLabel>& gold) {
  if (gold.empty()) throw std::invalid_argument("evaluate_stance: empty gold set");
  ClassReport rep;
  rep.total = gold.size();
  std::map<StanceLabel, std::size_t> tp, fp, fn, support;
  std::size_t correct = 0;
  for (const auto& [id, g] : gold) {
    auto it = predictions.find(id);
    StanceLabel p = it == predictions.end() ? StanceLabel::Neutral : it->second;
    ++support[g];
    if (p == g) {
      ++tp[g];
      ++correct;
    } else {
      ++fn[g];
      if (p != StanceLabel::Neutral) ++fp[p];
    }
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.total);
  for (StanceLabel c : {StanceLabel::Against, StanceLabel::Favour}) {
    ClassReport::Row row;
    row.label = c;
    row.support = support[c];
    double denom_p = static_cast<double>(tp[c] + fp[c]);
    double denom_r = static_cast<double>(tp[c] + fn[c]);
    row.precision = denom_p > 0 ? static_cast<double>(tp[c]) / denom_p : 0.0;
    row.recall = denom_r > 0 ? static_cast<double>(tp[c]) / denom_r : 0.0;
    row.f1 = row.precision + row.recall > 0
                 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    rep.rows.push_back(row);
  }
  for (const auto& row : rep.rows) {
    rep.macro_precision += row.precision / 2.0;
    rep.macro_recall += row.recall / 2.0;
    rep.macro_f1 += row.f1 / 2.0;
    double w = static_cast<double>(row.support) / static_cast<double>(rep.total);
    rep.weighted_precision += w * row.precision;
    rep.weighted_recall += w * row.recall;
    rep.weighted_f1 += w * row.f1;
  }
  return rep;
}

std::string ClassReport::format() const {
  std::ostringstream os;
  char buf[160];
  os << "              precision    recall  f1-score   support\n\n";
  for (const auto& row : rows) {
    std::string name = row.label == StanceLabel::Against ? "Against" : "Favour";
    std::snprintf(buf, sizeof buf, "%12s %10.2f %9.2f %9.2f %9zu\n", name.c_str(),
                  row.precision, row.recall, row.f1, row.support);
    os << buf;
  }
  os << '\n';
  std::snprintf(buf, sizeof buf, "%12s %10s %9s %9.2f %9zu\n", "accuracy", "", "", accuracy,
                total);
  os << buf;
  std::snprintf(buf, sizeof buf, "%12s %10.2f %9.2f %9.2f %9zu\n", "macro avg", macro_precision,
                macro_recall, macro_f1, total);
  os << buf;
  std::snprintf(buf, sizeof buf, "%12s %10.2f %9.2f %9.2f %9zu\n", "weighted avg",
                weighted_precision, weighted_recall, weighted_f1, total);
  os << buf;
  return os.str();
}

StanceSummary stance_summary(const Corpus& corpus, const std::vector<StanceResult>& results) {
  std::map<std::string, StanceLabel> by_id;
  for (const auto& r : results) by_id[r.comment_id] = r.label;
  std::map<Category, std::map<StanceLabel, std::size_t>> counts;
  std::set<Category> cats;
  for (const auto& v : corpus.videos) cats.insert(v.category);
  for (const auto& c : corpus.comments) {
    const Video* v = corpus.find_video(c.video_id);
    auto it = by_id.find(c.comment_id);
    if (!v || it == by_id.end()) continue;
    ++counts[v->category][it->second];
  }
  StanceSummary sum;
  for (Category cat : cats) {
    StanceSummary::Row row;
    row.category = cat;
    std::size_t total = 0;
    for (const auto& [l, n] : counts[cat]) total += n;
    row.total = total;
    row.empty_flag = total == 0;
    if (total > 0) {
      for (StanceLabel l : {StanceLabel::Favour, StanceLabel::Against, StanceLabel::Neutral}) {
        auto it = counts[cat].find(l);
        row.share[l] = it == counts[cat].end()
                           ? 0.0
                           : static_cast<double>(it->second) / static_cast<double>(total);
      }
    }
    sum.rows.push_back(std::move(row));
  }
  return sum;
}

std::vector<StanceResult> detect_stance_corpus(const Corpus& corpus,
                                               const TopicModelReport& topics,
                                               const EmbeddingBackend& backend,
                                               const std::map<int, KnowledgeBase>& kbs,
                                               const StanceConfig& config) {
  std::map<std::string, int> video_topic;
  std::map<int, TopicContext> contexts;
  for (const auto& cluster : topics.clusters) {
    contexts.emplace(cluster.topic_id, TopicContext::from_cluster(cluster, backend));
    for (const auto& vid : cluster.member_video_ids) video_topic[vid] = cluster.topic_id;
  }
  TopicContext no_topic;
  no_topic.representation = EmbeddingVector{std::vector<double>(backend.dim(), 0.0), 0.0};

  std::vector<StanceResult> out;
  for (const auto& [vid, idxs] : corpus.comments_by_video) {
    auto tit = video_topic.find(vid);
    const TopicContext& ctx =
        tit == video_topic.end() ? no_topic : contexts.at(tit->second);
    const KnowledgeBase* kb = nullptr;
    if (tit != video_topic.end()) {
      auto kit = kbs.find(tit->second);
      if (kit != kbs.end()) kb = &kit->second;
    }

    std::map<std::string, const Comment*> toplevel;
    std::map<std::string, std::vector<Comment>> replies;
    std::vector<const Comment*> orphan_replies;
    for (std::size_t i : idxs) {
      const Comment& c = corpus.comments[i];
      if (!c.parent_id) toplevel[c.comment_id] = &c;
    }
    for (std::size_t i : idxs) {
      const Comment& c = corpus.comments[i];
      if (!c.parent_id) continue;
      if (toplevel.count(*c.parent_id)) replies[*c.parent_id].push_back(c);
      else orphan_replies.push_back(&c);
    }
    for (const auto& [cid, cptr] : toplevel) {
      auto res = detect_stance_toplevel(*cptr, backend, ctx, kb, config);
      auto rit = replies.find(cid);
      if (rit != replies.end()) {
        auto rr = detect_stance_replies(*cptr, rit->second, res, backend, ctx, kb, config);
        out.push_back(std::move(res));
        for (auto& r : rr) out.push_back(std::move(r));
      } else {
        out.push_back(std::move(res));
      }
    }
    for (const Comment* c : orphan_replies) {
      out.push_back(detect_stance_toplevel(*c, backend, ctx, kb, config));
    }
  }
  return out;
}

}  // namespace engage
