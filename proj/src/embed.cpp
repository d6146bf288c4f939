#include "engage/embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "engage/text.hpp"

namespace engage {

namespace {

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64_le(out, bits);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64_le(std::istream& in) {
  std::uint64_t bits = read_u64_le(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

constexpr char kBinaryMagic[8] = {'E', 'M', 'B', 'I', 'D', 'X', '0', '1'};

}  // namespace

EmbeddingVector embed_text(const EmbeddingBackend& backend, std::string_view text) {
  return backend.embed(text);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cosine: dimension mismatch");
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot / (a.norm * b.norm);
}

HashedNGramBackend::HashedNGramBackend(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw std::invalid_argument("embedding dim must be positive");
}

std::size_t HashedNGramBackend::bucket_of(std::string_view ngram) const {
  return text::fnv1a(ngram, seed_ ^ 0xcbf29ce484222325ULL) % dim_;
}

EmbeddingVector HashedNGramBackend::embed(std::string_view input) const {
  EmbeddingVector out;
  out.values.assign(dim_, 0.0);
  auto toks = text::tokenize_lower(input);
  auto add = [&](const std::string& ngram) {
    std::size_t bucket = bucket_of(ngram);
    // second hash picks the sign
    std::uint64_t h2 = text::fnv1a(ngram, seed_ ^ 0x9e3779b97f4a7c15ULL);
    out.values[bucket] += (h2 & 1) ? 1.0 : -1.0;
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    add(toks[i]);
    if (i + 1 < toks.size()) add(toks[i] + " " + toks[i + 1]);
  }
  double norm = l2_norm(out.values);
  if (norm > 0) {
    for (double& x : out.values) x /= norm;
    out.norm = 1.0;
  }
  return out;
}

std::uint64_t PrecomputedBackend::content_hash(std::string_view input) {
  return text::fnv1a(input);
}

PrecomputedBackend::PrecomputedBackend(
    std::size_t dim, std::unordered_map<std::uint64_t, std::vector<double>> index)
    : dim_(dim), index_(std::move(index)) {
  for (const auto& [h, v] : index_) {
    if (v.size() != dim_) throw std::invalid_argument("index vector dimension mismatch");
  }
}

PrecomputedBackend::PrecomputedBackend(const std::filesystem::path& index_file) {
  std::ifstream in(index_file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding index: " + index_file.string());
  char magic[8] = {};
  in.read(magic, 8);
  if (in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, 8) == 0) {
    dim_ = read_u32_le(in);
    while (true) {
      std::uint64_t h = read_u64_le(in);
      if (!in) break;
      std::vector<double> v(dim_);
      for (auto& x : v) x = read_f64_le(in);
      if (!in) throw std::runtime_error("truncated embedding index");
      index_[h] = std::move(v);
    }
    return;
  }
  in.clear();
  in.seekg(0);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    std::uint64_t h = std::stoull(j.at("hash").get<std::string>(), nullptr, 16);
    std::vector<double> v = j.at("vector").get<std::vector<double>>();
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw std::runtime_error("inconsistent vector dimensions in index");
    index_[h] = std::move(v);
  }
  if (dim_ == 0) throw std::runtime_error("empty embedding index: " + index_file.string());
}

EmbeddingVector PrecomputedBackend::embed(std::string_view input) const {
  auto it = index_.find(content_hash(input));
  if (it == index_.end())
    throw MissingVectorError("no precomputed vector for text of length " +
                             std::to_string(input.size()));
  EmbeddingVector out;
  out.values = it->second;
  out.norm = l2_norm(out.values);
  return out;
}

void PrecomputedBackend::write_binary_index(
    const std::filesystem::path& path, std::size_t dim,
    const std::unordered_map<std::uint64_t, std::vector<double>>& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embedding index: " + path.string());
  out.write(kBinaryMagic, 8);
  write_u32_le(out, static_cast<std::uint32_t>(dim));
  for (const auto& [h, v] : index) {
    write_u64_le(out, h);
    for (double x : v) write_f64_le(out, x);
  }
}

void PrecomputedBackend::write_jsonl_index(
    const std::filesystem::path& path,
    const std::unordered_map<std::uint64_t, std::vector<double>>& index) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write embedding index: " + path.string());
  char buf[17];
  for (const auto& [h, v] : index) {
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    nlohmann::json j;
    j["hash"] = buf;
    j["vector"] = v;
    out << j.dump() << '\n';
  }
}

std::unique_ptr<EmbeddingBackend> make_backend(std::string_view spec) {
  if (spec == "hashed" || spec.empty()) return std::make_unique<HashedNGramBackend>();
  constexpr std::string_view prefix = "precomputed:";
  if (spec.rfind(prefix, 0) == 0) {
    return std::make_unique<PrecomputedBackend>(
        std::filesystem::path(std::string(spec.substr(prefix.size()))));
  }
  throw std::invalid_argument("unknown embedding backend: " + std::string(spec));
}

}  // namespace engage
