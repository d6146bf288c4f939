#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "engage/embed.hpp"
#include "engage/text.hpp"
#include "fixtures.hpp"

using namespace engage;

TEST_CASE("embed_text is deterministic") {
  HashedNGramBackend backend;
  auto a = embed_text(backend, "the truth is out there");
  auto b = embed_text(backend, "the truth is out there");
  CHECK(a.values == b.values);
  CHECK(a.norm == b.norm);
}

TEST_CASE("empty text embeds to the zero vector") {
  HashedNGramBackend backend;
  auto v = embed_text(backend, "");
  CHECK(v.norm == 0.0);
  for (double x : v.values) CHECK(x == 0.0);
}

TEST_CASE("non-empty embeddings are unit length") {
  HashedNGramBackend backend;
  for (const char* t : {"one", "two words", "a slightly longer sentence here"}) {
    CHECK(embed_text(backend, t).norm == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("disjoint token sets with verified non-colliding buckets have cosine 0") {
  HashedNGramBackend backend;
  std::string ta = "alpha beta", tb = "gamma delta";
  // bucket-disjointness verified first, as the example requires
  std::set<std::size_t> buckets_a = {backend.bucket_of("alpha"), backend.bucket_of("beta"),
                                     backend.bucket_of("alpha beta")};
  std::set<std::size_t> buckets_b = {backend.bucket_of("gamma"), backend.bucket_of("delta"),
                                     backend.bucket_of("gamma delta")};
  for (auto b : buckets_b) REQUIRE(buckets_a.count(b) == 0);
  CHECK(cosine(embed_text(backend, ta), embed_text(backend, tb)) == 0.0);
}

TEST_CASE("cosine basics") {
  HashedNGramBackend backend;
  auto x = embed_text(backend, "hello there world");
  CHECK(cosine(x, x) == doctest::Approx(1.0).epsilon(1e-12));

  EmbeddingVector neg = x;
  for (double& v : neg.values) v = -v;
  CHECK(cosine(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  EmbeddingVector zero{std::vector<double>(x.dim(), 0.0), 0.0};
  CHECK(cosine(x, zero) == 0.0);
  CHECK(cosine(zero, zero) == 0.0);
}

TEST_CASE("cosine rejects dimension mismatch") {
  EmbeddingVector a{{1.0, 0.0}, 1.0};
  EmbeddingVector b{{1.0, 0.0, 0.0}, 1.0};
  CHECK_THROWS_AS(cosine(a, b), std::invalid_argument);
}

TEST_CASE("cosine symmetry and bounds on random vectors") {
  std::mt19937_64 rng{99};
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingVector a, b;
    for (int i = 0; i < 16; ++i) {
      a.values.push_back(gauss(rng));
      b.values.push_back(gauss(rng));
    }
    for (double v : a.values) a.norm += v * v;
    for (double v : b.values) b.norm += v * v;
    a.norm = std::sqrt(a.norm);
    b.norm = std::sqrt(b.norm);
    double ab = cosine(a, b);
    CHECK(ab == cosine(b, a));
    CHECK(ab <= 1.0 + 1e-12);
    CHECK(ab >= -1.0 - 1e-12);
  }
}

TEST_CASE("hash stability: pinned golden vector for a fixture string") {
  HashedNGramBackend backend;
  auto v = embed_text(backend, "golden fixture sentence for stability");
  // pinned from a reference run; any change to hashing, tokenization or the
  // seed breaks this deliberately
  std::string bytes(reinterpret_cast<const char*>(v.values.data()),
                    v.values.size() * sizeof(double));
  CHECK(text::fnv1a(bytes) == 0xd464aab14df5696fULL);
  CHECK(v.values[21] == doctest::Approx(1.0 / 3.0));
  CHECK(v.values[218] == doctest::Approx(-1.0 / 3.0));
  CHECK(v.values[1011] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("precomputed backend round-trips both file formats") {
  fixtures::TempDir tmp;
  std::unordered_map<std::uint64_t, std::vector<double>> index;
  index[PrecomputedBackend::content_hash("first text")] = {1.0, 0.0, 0.0};
  index[PrecomputedBackend::content_hash("second text")] = {0.0, 0.5, -0.25};

  SUBCASE("binary") {
    PrecomputedBackend::write_binary_index(tmp / "idx.bin", 3, index);
    PrecomputedBackend backend{tmp / "idx.bin"};
    CHECK(backend.dim() == 3);
    CHECK(backend.embed("second text").values == std::vector<double>{0.0, 0.5, -0.25});
    CHECK_THROWS_AS(backend.embed("unknown text"), MissingVectorError);
  }
  SUBCASE("jsonl") {
    PrecomputedBackend::write_jsonl_index(tmp / "idx.jsonl", index);
    PrecomputedBackend backend{tmp / "idx.jsonl"};
    CHECK(backend.embed("first text").values == std::vector<double>{1.0, 0.0, 0.0});
  }
}

TEST_CASE("make_backend parses specs") {
  CHECK(make_backend("hashed")->dim() == 1024);
  fixtures::TempDir tmp;
  std::unordered_map<std::uint64_t, std::vector<double>> index;
  index[PrecomputedBackend::content_hash("x")] = {1.0, 2.0};
  PrecomputedBackend::write_binary_index(tmp / "i.bin", 2, index);
  auto b = make_backend("precomputed:" + (tmp / "i.bin").string());
  CHECK(b->dim() == 2);
  CHECK_THROWS_AS(make_backend("nonsense-spec"), std::invalid_argument);
}
