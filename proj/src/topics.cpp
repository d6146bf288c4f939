#include "engage/topics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

#include "engage/text.hpp"

namespace engage {

namespace {
constexpr double kLambdaCap = 1e12;
}

std::vector<std::string> TranscriptDoc::sentences() const {
  std::vector<std::string> out;
  std::size_t begin = 0;
  for (std::size_t end : sentence_ends) {
    out.push_back(text::trim(normalized.substr(begin, end - begin)));
    begin = end;
  }
  return out;
}

TranscriptDoc normalize_transcript(const std::string& video_id, const std::string& raw,
                                   const std::vector<std::string>& boilerplate,
                                   const SentenceSplitter& splitter) {
  TranscriptDoc doc;
  doc.video_id = video_id;
  doc.raw = raw;

  std::string norm = raw;
  for (const auto& phrase : boilerplate) {
    if (phrase.empty()) continue;
    std::size_t pos;
    while ((pos = text::ifind(norm, phrase)) != std::string_view::npos) {
      norm.erase(pos, phrase.size());
    }
  }
  // collapse runs of whitespace left behind by removals
  std::string collapsed;
  for (char c : norm) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!collapsed.empty() && collapsed.back() != ' ') collapsed += ' ';
    } else {
      collapsed += c;
    }
  }
  doc.normalized = text::trim(collapsed);
  if (doc.normalized.empty()) return doc;

  bool has_terminal = doc.normalized.find_first_of(".!?") != std::string::npos;
  if (has_terminal) {
    std::size_t start = 0;
    for (std::size_t i = 0; i < doc.normalized.size(); ++i) {
      char c = doc.normalized[i];
      if (c == '.' || c == '!' || c == '?') {
        while (i + 1 < doc.normalized.size() &&
               (doc.normalized[i + 1] == '.' || doc.normalized[i + 1] == '!' ||
                doc.normalized[i + 1] == '?'))
          ++i;
        doc.sentence_ends.push_back(i + 1);
        start = i + 1;
      }
    }
    if (start < doc.normalized.size()) doc.sentence_ends.push_back(doc.normalized.size());
  } else {
    // fixed token windows
    std::size_t count = 0, window = std::max<std::size_t>(splitter.window_tokens, 1);
    bool in_tok = false;
    for (std::size_t i = 0; i <= doc.normalized.size(); ++i) {
      bool space = i == doc.normalized.size() ||
                   std::isspace(static_cast<unsigned char>(doc.normalized[i]));
      if (!space && !in_tok) {
        in_tok = true;
      } else if (space && in_tok) {
        in_tok = false;
        if (++count % window == 0) doc.sentence_ends.push_back(i);
      }
    }
    if (doc.sentence_ends.empty() || doc.sentence_ends.back() != doc.normalized.size())
      doc.sentence_ends.push_back(doc.normalized.size());
  }
  return doc;
}

std::vector<Point> reduce(const std::vector<EmbeddingVector>& embeddings,
                          std::size_t target_dim) {
  const std::size_t n = embeddings.size();
  if (target_dim == 0) throw std::invalid_argument("target_dim must be positive");
  if (n < target_dim + 1)
    throw std::invalid_argument("reduce needs at least target_dim + 1 points");
  const std::size_t d = embeddings[0].dim();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    if (embeddings[i].dim() != d) throw std::invalid_argument("mixed embedding dimensions");
    for (std::size_t j = 0; j < d; ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = embeddings[i].values[j];
  }
  Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::MatrixXd Xc = X.rowwise() - mean;

  // principal directions via the smaller of the two scatter matrices
  Eigen::MatrixXd components(static_cast<Eigen::Index>(d),
                             static_cast<Eigen::Index>(target_dim));
  if (n <= d) {
    Eigen::MatrixXd gram = Xc * Xc.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    for (std::size_t k = 0; k < target_dim; ++k) {
      Eigen::Index idx = static_cast<Eigen::Index>(n - 1 - k);  // eigenvalues ascending
      double lambda = std::max(es.eigenvalues()(idx), 0.0);
      Eigen::VectorXd v = Xc.transpose() * es.eigenvectors().col(idx);
      double norm = v.norm();
      if (norm > 1e-12 && lambda > 1e-12) v /= norm;
      else v.setZero();
      components.col(static_cast<Eigen::Index>(k)) = v;
    }
  } else {
    Eigen::MatrixXd scatter = Xc.transpose() * Xc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
    for (std::size_t k = 0; k < target_dim; ++k) {
      components.col(static_cast<Eigen::Index>(k)) =
          es.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - k));
    }
  }
  // deterministic sign: largest-magnitude loading positive
  for (Eigen::Index k = 0; k < components.cols(); ++k) {
    Eigen::Index imax = 0;
    components.col(k).cwiseAbs().maxCoeff(&imax);
    if (components(imax, k) < 0) components.col(k) = -components.col(k);
  }

  Eigen::MatrixXd reduced = Xc * components;
  std::vector<Point> out(n, Point(target_dim, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < target_dim; ++k)
      out[i][k] = reduced(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  return out;
}

namespace {

double euclid(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

std::vector<double> core_distances(const std::vector<std::vector<double>>& dist,
                                   std::size_t min_samples) {
  const std::size_t n = dist.size();
  std::vector<double> core(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row = dist[i];  // includes self distance 0
    std::sort(row.begin(), row.end());
    core[i] = row[std::min(min_samples, n - 1)];
  }
  return core;
}

struct MstEdge {
  std::size_t a = 0, b = 0;
  double w = 0.0;
};

std::vector<MstEdge> prim_mst(const std::vector<std::vector<double>>& mreach) {
  const std::size_t n = mreach.size();
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::vector<MstEdge> edges;
  in_tree[0] = true;
  for (std::size_t j = 1; j < n; ++j) {
    best[j] = mreach[0][j];
    from[j] = 0;
  }
  for (std::size_t it = 1; it < n; ++it) {
    std::size_t pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && (pick == n || best[j] < best[pick])) pick = j;
    }
    in_tree[pick] = true;
    edges.push_back({from[pick], pick, best[pick]});
    for (std::size_t j = 0; j < n; ++j) {
      if (!in_tree[j] && mreach[pick][j] < best[j]) {
        best[j] = mreach[pick][j];
        from[j] = pick;
      }
    }
  }
  return edges;
}

struct HierNode {
  std::size_t left = 0, right = 0;  // node ids; < n => leaf point
  double dist = 0.0;
  std::size_t size = 0;
};

struct CondensedCluster {
  double lambda_birth = 0.0;
  double lambda_split = 0.0;  // 0 => never split
  std::vector<std::pair<std::size_t, double>> fallouts;  // (point, lambda_leave)
  std::vector<std::size_t> retained;  // points held to lambda cap (duplicate groups)
  int parent = -1;
  std::array<int, 2> children = {-1, -1};
  std::size_t n_points = 0;  // points at birth
  double stability = 0.0;
};

}  // namespace

double mutual_reachability(const std::vector<Point>& points, std::size_t min_samples,
                           std::size_t a, std::size_t b) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = euclid(points[i], points[j]);
  auto core = core_distances(dist, min_samples);
  return std::max({core[a], core[b], dist[a][b]});
}

std::vector<int> cluster_density(const std::vector<Point>& points,
                                 std::size_t min_cluster_size, std::size_t min_samples,
                                 ClusterSelection selection) {
  const std::size_t n = points.size();
  if (min_cluster_size < 2) throw std::invalid_argument("min_cluster_size must be >= 2");
  if (min_samples < 1) throw std::invalid_argument("min_samples must be >= 1");
  if (n < min_cluster_size)
    throw std::invalid_argument("need at least min_cluster_size points");

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i][j] = dist[j][i] = euclid(points[i], points[j]);
  auto core = core_distances(dist, min_samples);
  std::vector<std::vector<double>> mreach(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      mreach[i][j] = mreach[j][i] = std::max({core[i], core[j], dist[i][j]});

  auto edges = prim_mst(mreach);
  std::sort(edges.begin(), edges.end(),
            [](const MstEdge& a, const MstEdge& b) { return a.w < b.w; });

  // single-linkage dendrogram over MST edges
  std::vector<HierNode> nodes;  // node id = n + index
  std::vector<std::size_t> uf(2 * n);  // union-find with pointer to current top node
  std::iota(uf.begin(), uf.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (uf[x] != x) {
      uf[x] = uf[uf[x]];
      x = uf[x];
    }
    return x;
  };
  std::vector<std::size_t> top(2 * n);  // representative -> top node id
  std::iota(top.begin(), top.end(), std::size_t{0});
  auto node_size = [&](std::size_t id) { return id < n ? std::size_t{1} : nodes[id - n].size; };
  for (const auto& e : edges) {
    std::size_t ra = find(e.a), rb = find(e.b);
    std::size_t na = top[ra], nb = top[rb];
    HierNode h;
    h.left = na;
    h.right = nb;
    h.dist = e.w;
    h.size = node_size(na) + node_size(nb);
    nodes.push_back(h);
    std::size_t id = n + nodes.size() - 1;
    uf[ra] = rb;
    top[find(rb)] = id;
  }

  std::vector<int> labels(n, -1);
  if (nodes.empty()) {
    // single point corpus cannot reach here (n >= min_cluster_size >= 2)
    return labels;
  }

  // condense the hierarchy
  std::vector<CondensedCluster> clusters;
  clusters.emplace_back();  // root, lambda_birth 0
  clusters[0].n_points = n;
  std::vector<int> point_cluster(n, 0);  // deepest condensed cluster per point

  auto collect_points = [&](std::size_t node_id, std::vector<std::size_t>& out) {
    std::vector<std::size_t> stack{node_id};
    while (!stack.empty()) {
      std::size_t id = stack.back();
      stack.pop_back();
      if (id < n) {
        out.push_back(id);
      } else {
        stack.push_back(nodes[id - n].left);
        stack.push_back(nodes[id - n].right);
      }
    }
  };

  struct Frame {
    std::size_t node_id;
    int cluster;
  };
  std::vector<Frame> stack{{n + nodes.size() - 1, 0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.node_id < n) {
      clusters[f.cluster].retained.push_back(f.node_id);
      point_cluster[f.node_id] = f.cluster;
      continue;
    }
    const HierNode& h = nodes[f.node_id - n];
    double lambda = h.dist > 0 ? std::min(1.0 / h.dist, kLambdaCap) : kLambdaCap;
    std::size_t sl = node_size(h.left), sr = node_size(h.right);
    if (h.dist <= 0.0) {
      // distance-zero merge: density-connected at every level, not a split
      stack.push_back({h.left, f.cluster});
      stack.push_back({h.right, f.cluster});
      continue;
    }
    if (sl >= min_cluster_size && sr >= min_cluster_size) {
      clusters[f.cluster].lambda_split = lambda;
      for (std::size_t child : {h.left, h.right}) {
        CondensedCluster c;
        c.lambda_birth = lambda;
        c.parent = f.cluster;
        c.n_points = node_size(child);
        clusters.push_back(c);
        int id = static_cast<int>(clusters.size() - 1);
        if (clusters[f.cluster].children[0] < 0) clusters[f.cluster].children[0] = id;
        else clusters[f.cluster].children[1] = id;
        stack.push_back({child, id});
      }
      continue;
    }
    for (std::size_t child : {h.left, h.right}) {
      if (node_size(child) >= min_cluster_size) {
        stack.push_back({child, f.cluster});
      } else {
        std::vector<std::size_t> pts;
        collect_points(child, pts);
        for (std::size_t p : pts) {
          clusters[f.cluster].fallouts.emplace_back(p, lambda);
          point_cluster[p] = f.cluster;
        }
      }
    }
  }

  // stability (excess of mass)
  for (auto& c : clusters) {
    double s = 0.0;
    for (const auto& [p, lam] : c.fallouts) s += lam - c.lambda_birth;
    if (c.lambda_split > 0) {
      std::size_t passed = 0;
      for (int ch : c.children)
        if (ch >= 0) passed += clusters[static_cast<std::size_t>(ch)].n_points;
      s += static_cast<double>(passed) * (c.lambda_split - c.lambda_birth);
    }
    s += static_cast<double>(c.retained.size()) * (kLambdaCap - c.lambda_birth);
    c.stability = s;
  }

  std::vector<bool> selected(clusters.size(), false);
  if (clusters.size() == 1) {
    selected[0] = true;  // sole cluster: degenerate corpus, keep everything
  } else if (selection == ClusterSelection::Leaf) {
    for (std::size_t i = 1; i < clusters.size(); ++i) {
      if (clusters[i].children[0] < 0) selected[i] = true;
    }
  } else {
    // bottom-up: children were appended after parents, so reverse index order
    std::vector<double> hat(clusters.size(), 0.0);
    for (std::size_t idx = clusters.size(); idx-- > 0;) {
      auto& c = clusters[idx];
      if (c.children[0] < 0) {
        hat[idx] = c.stability;
        if (idx > 0) selected[idx] = true;
        continue;
      }
      double child_sum = 0.0;
      for (int ch : c.children)
        if (ch >= 0) child_sum += hat[static_cast<std::size_t>(ch)];
      if (idx == 0 || child_sum >= c.stability) {
        hat[idx] = child_sum;  // keep children
      } else {
        hat[idx] = c.stability;
        selected[idx] = true;
        // deselect the whole subtree
        std::vector<int> sub;
        for (int ch : c.children)
          if (ch >= 0) sub.push_back(ch);
        while (!sub.empty()) {
          int s = sub.back();
          sub.pop_back();
          selected[static_cast<std::size_t>(s)] = false;
          for (int ch : clusters[static_cast<std::size_t>(s)].children)
            if (ch >= 0) sub.push_back(ch);
        }
      }
    }
  }

  // label: deepest selected ancestor-or-self of the point's cluster
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t p = 0; p < n; ++p) {
    int c = point_cluster[p];
    while (c >= 0 && !selected[static_cast<std::size_t>(c)])
      c = clusters[static_cast<std::size_t>(c)].parent;
    if (c >= 0) members[c].push_back(p);
  }
  // relabel by size desc, then by first member for determinism
  std::vector<std::pair<int, std::vector<std::size_t>>> ordered(members.begin(), members.end());
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
    return a.second.front() < b.second.front();
  });
  int next = 0;
  for (const auto& [cid, pts] : ordered) {
    for (std::size_t p : pts) labels[p] = next;
    ++next;
  }
  return labels;
}

namespace {

std::vector<std::string> phrases_of(const std::vector<std::string>& tokens,
                                    const std::set<std::string>& stop) {
  std::vector<std::string> out;
  for (std::size_t len = 2; len <= 3; ++len) {
    if (tokens.size() < len) break;
    for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
      bool has_stop = false;
      std::string phrase;
      for (std::size_t k = 0; k < len; ++k) {
        if (stop.count(tokens[i + k])) {
          has_stop = true;
          break;
        }
        if (k) phrase += ' ';
        phrase += tokens[i + k];
      }
      if (!has_stop) out.push_back(std::move(phrase));
    }
  }
  return out;
}

}  // namespace

std::vector<std::vector<std::pair<std::string, double>>> ctfidf_keywords(
    const std::vector<std::vector<std::size_t>>& clusters,
    const std::vector<std::string>& docs, const std::vector<std::string>& stopwords,
    std::size_t top_k) {
  if (clusters.empty()) throw std::invalid_argument("ctfidf_keywords: no clusters");
  std::set<std::string> stop(stopwords.begin(), stopwords.end());

  std::vector<std::map<std::string, double>> tf(clusters.size());
  std::map<std::string, double> global;
  double total_phrases = 0.0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t di : clusters[c]) {
      auto tokens = text::tokenize_lower(docs[di]);
      for (auto& p : phrases_of(tokens, stop)) {
        tf[c][p] += 1.0;
        global[p] += 1.0;
        total_phrases += 1.0;
      }
    }
  }
  double avg_per_cluster = total_phrases / static_cast<double>(clusters.size());

  std::vector<std::vector<std::pair<std::string, double>>> out(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [phrase, count] : tf[c]) {
      double score = count * std::log(1.0 + avg_per_cluster / global[phrase]);
      scored.emplace_back(phrase, score);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;  // lexicographic tie-break
    });
    if (scored.size() > top_k) scored.resize(top_k);
    out[c] = std::move(scored);
  }
  return out;
}

double npmi_over_windows(const std::vector<std::vector<std::string>>& token_docs,
                         const std::string& a, const std::string& b, std::size_t window) {
  double n_windows = 0.0, na = 0.0, nb = 0.0, nab = 0.0;
  for (const auto& toks : token_docs) {
    std::size_t count = toks.size() <= window ? 1 : toks.size() - window + 1;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t end = std::min(i + window, toks.size());
      bool has_a = false, has_b = false;
      for (std::size_t k = i; k < end; ++k) {
        if (toks[k] == a) has_a = true;
        if (toks[k] == b) has_b = true;
      }
      n_windows += 1.0;
      if (has_a) na += 1.0;
      if (has_b) nb += 1.0;
      if (has_a && has_b) nab += 1.0;
    }
  }
  if (n_windows == 0.0 || nab == 0.0) return -1.0;
  double pa = na / n_windows, pb = nb / n_windows, pab = nab / n_windows;
  if (pab >= 1.0) return 1.0;  // co-occur in every window
  return std::log(pab / (pa * pb)) / (-std::log(pab));
}

TopicModelReport topic_metrics(const std::vector<int>& labels,
                               const std::vector<Point>& points,
                               const std::vector<std::string>& docs,
                               const std::vector<std::string>& doc_video_ids,
                               const std::vector<std::string>& stopwords,
                               std::size_t top_k) {
  TopicModelReport rep;
  rep.labels = labels;
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  std::size_t n_clusters = static_cast<std::size_t>(max_label + 1);
  std::vector<std::vector<std::size_t>> members(n_clusters);
  std::size_t noise = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) ++noise;
    else members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  rep.noise_fraction = labels.empty()
                           ? 0.0
                           : static_cast<double>(noise) / static_cast<double>(labels.size());

  // silhouette + Davies-Bouldin on non-noise points
  if (n_clusters >= 2) {
    double sil_sum = 0.0;
    std::size_t sil_n = 0;
    for (std::size_t c = 0; c < n_clusters; ++c) {
      for (std::size_t i : members[c]) {
        double a = 0.0;
        if (members[c].size() > 1) {
          for (std::size_t j : members[c])
            if (j != i) a += euclid(points[i], points[j]);
          a /= static_cast<double>(members[c].size() - 1);
        }
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c2 = 0; c2 < n_clusters; ++c2) {
          if (c2 == c || members[c2].empty()) continue;
          double m = 0.0;
          for (std::size_t j : members[c2]) m += euclid(points[i], points[j]);
          b = std::min(b, m / static_cast<double>(members[c2].size()));
        }
        double denom = std::max(a, b);
        sil_sum += denom > 0 ? (b - a) / denom : 0.0;
        ++sil_n;
      }
    }
    if (sil_n > 0) rep.silhouette = sil_sum / static_cast<double>(sil_n);

    std::vector<Point> centroids(n_clusters);
    std::vector<double> dispersion(n_clusters, 0.0);
    for (std::size_t c = 0; c < n_clusters; ++c) {
      Point cen(points.empty() ? 0 : points[0].size(), 0.0);
      for (std::size_t i : members[c])
        for (std::size_t k = 0; k < cen.size(); ++k) cen[k] += points[i][k];
      for (auto& x : cen) x /= static_cast<double>(members[c].size());
      centroids[c] = cen;
      for (std::size_t i : members[c]) dispersion[c] += euclid(points[i], cen);
      dispersion[c] /= static_cast<double>(members[c].size());
    }
    double db = 0.0;
    for (std::size_t i = 0; i < n_clusters; ++i) {
      double worst = 0.0;
      for (std::size_t j = 0; j < n_clusters; ++j) {
        if (i == j) continue;
        double d = euclid(centroids[i], centroids[j]);
        if (d > 0) worst = std::max(worst, (dispersion[i] + dispersion[j]) / d);
      }
      db += worst;
    }
    rep.davies_bouldin = db / static_cast<double>(n_clusters);
  }

  auto keywords = ctfidf_keywords(members, docs, stopwords, top_k);

  for (std::size_t c = 0; c < n_clusters; ++c) {
    TopicCluster tc;
    tc.topic_id = static_cast<int>(c);
    tc.size = members[c].size();
    for (std::size_t i : members[c]) tc.member_video_ids.push_back(doc_video_ids[i]);
    tc.keywords = keywords[c];
    tc.empty_keywords_flag = tc.keywords.empty();

    // NPMI coherence over the distinct tokens of the top keywords
    std::vector<std::string> kw_tokens;
    for (const auto& [phrase, score] : tc.keywords) {
      for (auto& t : text::tokenize_lower(phrase)) {
        if (std::find(kw_tokens.begin(), kw_tokens.end(), t) == kw_tokens.end())
          kw_tokens.push_back(t);
      }
      if (kw_tokens.size() >= 10) break;
    }
    if (kw_tokens.size() > 10) kw_tokens.resize(10);
    std::vector<std::vector<std::string>> token_docs;
    for (std::size_t i : members[c]) token_docs.push_back(text::tokenize_lower(docs[i]));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < kw_tokens.size(); ++a) {
      for (std::size_t b = a + 1; b < kw_tokens.size(); ++b) {
        sum += npmi_over_windows(token_docs, kw_tokens[a], kw_tokens[b]);
        ++pairs;
      }
    }
    tc.coherence = pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
    rep.clusters.push_back(std::move(tc));
  }

  // inter-topic cosine over keyword weight vectors
  std::map<std::string, std::size_t> vocab;
  for (const auto& kws : keywords)
    for (const auto& [p, s] : kws) vocab.try_emplace(p, vocab.size());
  std::vector<EmbeddingVector> weight_vecs(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    EmbeddingVector v;
    v.values.assign(vocab.size(), 0.0);
    for (const auto& [p, s] : keywords[c]) v.values[vocab[p]] = s;
    double norm = 0.0;
    for (double x : v.values) norm += x * x;
    v.norm = std::sqrt(norm);
    weight_vecs[c] = std::move(v);
  }
  rep.inter_topic_cosine.assign(n_clusters, std::vector<double>(n_clusters, 0.0));
  for (std::size_t i = 0; i < n_clusters; ++i) {
    for (std::size_t j = 0; j < n_clusters; ++j) {
      rep.inter_topic_cosine[i][j] =
          i == j ? 1.0
                 : (vocab.empty() ? 0.0 : cosine(weight_vecs[i], weight_vecs[j]));
    }
  }
  return rep;
}

std::vector<TopicCluster> filter_coherent(const TopicModelReport& report, double threshold) {
  std::vector<TopicCluster> out;
  for (const auto& c : report.clusters) {
    if (c.coherence > threshold) out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TopicCluster& a, const TopicCluster& b) { return a.size > b.size; });
  return out;
}

std::vector<std::string> default_stopwords() {
  return {"a",    "an",   "the",  "and", "or",   "but", "if",   "of",   "at",  "by",
          "for",  "with", "to",   "in",  "on",   "is",  "are",  "was",  "were", "be",
          "been", "it",   "its",  "this","that", "these","those","i",   "you", "he",
          "she",  "we",   "they", "them","his",  "her", "my",   "your", "our", "their",
          "so",   "not",  "no",   "do",  "does", "did", "have", "has",  "had", "as",
          "from", "will", "would","can", "could","there","here", "what", "when", "who",
          "how",  "why",  "all",  "just","about","into", "than", "then", "out", "up"};
}

std::vector<std::string> default_boilerplate() {
  return {"don't forget to subscribe",
          "thanks for watching",
          "like and subscribe",
          "hit the notification bell",
          "welcome back to the channel",
          "check out the description below",
          "smash that like button"};
}

TopicModelReport model_topics(const Corpus& corpus, const EmbeddingBackend& backend,
                              const TopicModelConfig& config) {
  std::vector<std::string> docs, vids;
  for (const auto& v : corpus.videos) {
    if (!v.transcript || v.transcript->empty()) continue;
    auto doc = normalize_transcript(v.video_id, *v.transcript, config.boilerplate);
    if (doc.normalized.empty()) continue;
    docs.push_back(doc.normalized);
    vids.push_back(v.video_id);
  }
  if (docs.size() < std::max<std::size_t>(config.min_cluster_size, 3))
    throw std::runtime_error("not enough transcripts for topic modelling");

  std::vector<EmbeddingVector> embeddings;
  embeddings.reserve(docs.size());
  for (const auto& d : docs) embeddings.push_back(backend.embed(d));

  std::size_t target = std::min(config.reduce_dim, docs.size() - 1);
  auto reduced = reduce(embeddings, target);
  auto labels =
      cluster_density(reduced, config.min_cluster_size, config.min_samples, config.selection);
  auto rep = topic_metrics(labels, reduced, docs, vids, config.stopwords, config.top_k);

  auto scatter = reduce(embeddings, std::min<std::size_t>(2, docs.size() - 1));
  for (const auto& p : scatter) {
    rep.scatter.push_back({p[0], p.size() > 1 ? p[1] : 0.0});
  }
  for (auto& cluster : rep.clusters) {
    for (const auto& vid : cluster.member_video_ids) {
      auto it = corpus.comments_by_video.find(vid);
      if (it != corpus.comments_by_video.end()) cluster.comment_count += it->second.size();
    }
  }
  return rep;
}

void write_topic_report(const TopicModelReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["noise_fraction"] = report.noise_fraction;
  if (report.silhouette) j["silhouette"] = *report.silhouette;
  else j["silhouette"] = nullptr;
  if (report.davies_bouldin) j["davies_bouldin"] = *report.davies_bouldin;
  else j["davies_bouldin"] = nullptr;
  j["inter_topic_cosine"] = report.inter_topic_cosine;
  j["labels"] = report.labels;
  j["clusters"] = nlohmann::json::array();
  for (const auto& c : report.clusters) {
    nlohmann::json jc;
    jc["topic_id"] = c.topic_id;
    jc["size"] = c.size;
    jc["comment_count"] = c.comment_count;
    jc["coherence"] = c.coherence;
    jc["videos"] = c.member_video_ids;
    jc["keywords"] = nlohmann::json::array();
    for (const auto& [p, s] : c.keywords) jc["keywords"].push_back({{"phrase", p}, {"score", s}});
    j["clusters"].push_back(std::move(jc));
  }
  j["scatter"] = nlohmann::json::array();
  for (const auto& p : report.scatter) j["scatter"].push_back({p[0], p[1]});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write topic report: " + path.string());
  out << j.dump(2) << '\n';
}

TopicModelReport load_topic_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read topic report: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  TopicModelReport rep;
  rep.noise_fraction = j.value("noise_fraction", 0.0);
  if (j.contains("silhouette") && !j["silhouette"].is_null())
    rep.silhouette = j["silhouette"].get<double>();
  if (j.contains("davies_bouldin") && !j["davies_bouldin"].is_null())
    rep.davies_bouldin = j["davies_bouldin"].get<double>();
  if (j.contains("inter_topic_cosine"))
    rep.inter_topic_cosine = j["inter_topic_cosine"].get<std::vector<std::vector<double>>>();
  if (j.contains("labels")) rep.labels = j["labels"].get<std::vector<int>>();
  for (const auto& jc : j.value("clusters", nlohmann::json::array())) {
    TopicCluster c;
    c.topic_id = jc.value("topic_id", -1);
    c.size = jc.value("size", std::size_t{0});
    c.comment_count = jc.value("comment_count", std::size_t{0});
    c.coherence = jc.value("coherence", 0.0);
    c.member_video_ids = jc.value("videos", std::vector<std::string>{});
    for (const auto& kw : jc.value("keywords", nlohmann::json::array()))
      c.keywords.emplace_back(kw.at("phrase").get<std::string>(), kw.at("score").get<double>());
    rep.clusters.push_back(std::move(c));
  }
  for (const auto& p : j.value("scatter", nlohmann::json::array()))
    rep.scatter.push_back({p[0].get<double>(), p[1].get<double>()});
  return rep;
}

}  // namespace engage
