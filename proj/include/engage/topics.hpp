#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "engage/corpus.hpp"
#include "engage/embed.hpp"

namespace engage {

struct TranscriptDoc {
  std::string video_id;
  std::string raw;
  std::string normalized;
  std::vector<std::size_t> sentence_ends;  // end offsets into normalized

  std::vector<std::string> sentences() const;
};

struct SentenceSplitter {
  std::size_t window_tokens = 40;  // fallback when no terminal punctuation exists
};

// Removes boilerplate phrases (exact, case-insensitive) and splits sentences on
// terminal punctuation, falling back to fixed token windows.
TranscriptDoc normalize_transcript(const std::string& video_id, const std::string& raw,
                                   const std::vector<std::string>& boilerplate,
                                   const SentenceSplitter& splitter = {});

using Point = std::vector<double>;

// Principal-components projection with a deterministic sign convention (the
// largest-magnitude loading of each component is positive). Needs at least
// target_dim + 1 points.
std::vector<Point> reduce(const std::vector<EmbeddingVector>& embeddings,
                          std::size_t target_dim);

enum class ClusterSelection { ExcessOfMass, Leaf };

// HDBSCAN: core distances -> mutual reachability -> MST -> condensed
// single-linkage hierarchy -> stability-based cluster selection. Label -1 is
// noise; labels are contiguous from 0 ordered by cluster size (desc).
std::vector<int> cluster_density(const std::vector<Point>& points,
                                 std::size_t min_cluster_size, std::size_t min_samples,
                                 ClusterSelection selection = ClusterSelection::ExcessOfMass);

double mutual_reachability(const std::vector<Point>& points, std::size_t min_samples,
                           std::size_t a, std::size_t b);

struct TopicCluster {
  int topic_id = -1;
  std::vector<std::string> member_video_ids;
  std::vector<std::pair<std::string, double>> keywords;  // 2-3 token phrases, ranked
  double coherence = 0.0;
  std::size_t size = 0;
  std::size_t comment_count = 0;  // comments inherited from member videos
  bool empty_keywords_flag = false;
};

// Class-based TF-IDF: score(t,c) = tf(t,c) * log(1 + A / f(t)) over phrases of
// 2-3 tokens; phrases containing a stopword are excluded; ties broken
// lexicographically.
std::vector<std::vector<std::pair<std::string, double>>> ctfidf_keywords(
    const std::vector<std::vector<std::size_t>>& clusters,  // doc indices per cluster
    const std::vector<std::string>& docs, const std::vector<std::string>& stopwords,
    std::size_t top_k = 10);

struct TopicModelReport {
  std::vector<TopicCluster> clusters;
  std::optional<double> silhouette;       // unset with < 2 clusters
  std::optional<double> davies_bouldin;
  std::vector<std::vector<double>> inter_topic_cosine;
  double noise_fraction = 0.0;
  std::vector<std::array<double, 2>> scatter;  // 2-D coordinates per document
  std::vector<int> labels;
};

// Silhouette and Davies-Bouldin over non-noise points in the reduced space,
// NPMI coherence (20-token sliding windows) over cluster documents, and
// inter-topic cosine over keyword weight vectors.
TopicModelReport topic_metrics(const std::vector<int>& labels,
                               const std::vector<Point>& points,
                               const std::vector<std::string>& docs,
                               const std::vector<std::string>& doc_video_ids,
                               const std::vector<std::string>& stopwords,
                               std::size_t top_k = 10);

std::vector<TopicCluster> filter_coherent(const TopicModelReport& report, double threshold);

// Pointwise NPMI of two tokens over sliding windows; exposed for tests.
double npmi_over_windows(const std::vector<std::vector<std::string>>& token_docs,
                         const std::string& a, const std::string& b,
                         std::size_t window = 20);

std::vector<std::string> default_stopwords();
std::vector<std::string> default_boilerplate();

struct TopicModelConfig {
  std::size_t reduce_dim = 8;
  std::size_t min_cluster_size = 15;
  std::size_t min_samples = 5;
  ClusterSelection selection = ClusterSelection::ExcessOfMass;
  std::size_t top_k = 10;
  std::vector<std::string> stopwords = default_stopwords();
  std::vector<std::string> boilerplate = default_boilerplate();
};

// Full transcript -> topic report pass over a corpus (videos with transcripts).
TopicModelReport model_topics(const Corpus& corpus, const EmbeddingBackend& backend,
                              const TopicModelConfig& config);

void write_topic_report(const TopicModelReport& report, const std::filesystem::path& path);
TopicModelReport load_topic_report(const std::filesystem::path& path);

}  // namespace engage
