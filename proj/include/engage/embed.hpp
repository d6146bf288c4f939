#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace engage {

struct EmbeddingVector {
  std::vector<double> values;
  double norm = 0.0;

  std::size_t dim() const { return values.size(); }
};

struct MissingVectorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

EmbeddingVector embed_text(const EmbeddingBackend& backend, std::string_view text);

// dot(a,b)/(|a||b|); 0 when either norm is 0. Throws on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// Signed feature hashing over lowercase word unigrams + bigrams, TF-weighted,
// L2-normalized. Deterministic for a fixed (dim, seed).
class HashedNGramBackend : public EmbeddingBackend {
 public:
  explicit HashedNGramBackend(std::size_t dim = 1024, std::uint64_t seed = 0x5eed);
  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;

  // Bucket an n-gram lands in; exposed so tests can verify non-collision.
  std::size_t bucket_of(std::string_view ngram) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Exact lookup by 64-bit content hash of the text. Index file is either JSONL
// ({"hash":"<16 hex>","vector":[...]}) or binary: magic "EMBIDX01", u32 dim LE,
// then (u64 hash LE, dim x f64 LE) records.
class PrecomputedBackend : public EmbeddingBackend {
 public:
  explicit PrecomputedBackend(const std::filesystem::path& index_file);
  PrecomputedBackend(std::size_t dim,
                     std::unordered_map<std::uint64_t, std::vector<double>> index);

  std::size_t dim() const override { return dim_; }
  EmbeddingVector embed(std::string_view text) const override;  // throws MissingVectorError

  static std::uint64_t content_hash(std::string_view text);
  static void write_binary_index(
      const std::filesystem::path& path, std::size_t dim,
      const std::unordered_map<std::uint64_t, std::vector<double>>& index);
  static void write_jsonl_index(
      const std::filesystem::path& path,
      const std::unordered_map<std::uint64_t, std::vector<double>>& index);

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::uint64_t, std::vector<double>> index_;
};

std::unique_ptr<EmbeddingBackend> make_backend(std::string_view spec);  // "hashed" | "precomputed:<file>"

}  // namespace engage
