#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "intentrec/embedding.hpp"

using namespace intentrec;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumeric runs") {
  CHECK(tokenize("Hello, World!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("kw12 kw7") == std::vector<std::string>{"kw12", "kw7"});
  CHECK(tokenize("a--b__c  d") == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(tokenize("...") == std::vector<std::string>{});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("MiXeD42case") == std::vector<std::string>{"mixed42case"});
}

TEST_CASE("embedding table stores fixed-dimension vectors") {
  EmbeddingTable table(3);
  Vector v(3);
  v << 1, 2, 3;
  table.insert("cat", v);
  CHECK(table.size() == 1);
  CHECK(table.contains("cat"));
  CHECK_FALSE(table.contains("dog"));
  REQUIRE(table.find("cat") != nullptr);
  CHECK((*table.find("cat") - v).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(table.find("dog") == nullptr);

  Vector wrong(2);
  wrong << 1, 2;
  CHECK_THROWS(table.insert("dog", wrong));
}

TEST_CASE("word vector files load with and without a header") {
  const std::string path = temp_path("intentrec_vecs.txt");
  {
    std::ofstream os(path);
    os << "3 2\n";
    os << "cat 1.0 2.0\n";
    os << "dog 0.5 -0.5\n";
    os << "owl -1.0 0.0\n";
  }
  const EmbeddingTable with_header = load_embeddings(path);
  CHECK(with_header.size() == 3);
  CHECK(with_header.dim() == 2);
  CHECK((*with_header.find("dog"))(1) == -0.5);

  {
    std::ofstream os(path);
    os << "cat 1.0 2.0\n";
    os << "dog 0.5 -0.5\n";
  }
  const EmbeddingTable headerless = load_embeddings(path);
  CHECK(headerless.size() == 2);
  CHECK(headerless.dim() == 2);

  const EmbeddingTable filtered =
      load_embeddings(path, std::set<std::string>{"dog"});
  CHECK(filtered.size() == 1);
  CHECK(filtered.contains("dog"));
  CHECK_FALSE(filtered.contains("cat"));
  std::remove(path.c_str());
}

TEST_CASE("word vector loader rejects inconsistent rows") {
  const std::string path = temp_path("intentrec_vecs_bad.txt");
  {
    std::ofstream os(path);
    os << "cat 1.0 2.0\n";
    os << "dog 0.5\n";  // dimension mismatch
  }
  CHECK_THROWS(load_embeddings(path));
  {
    std::ofstream os(path);
    os << "cat 1.0 two\n";
  }
  CHECK_THROWS(load_embeddings(path));
  std::remove(path.c_str());
  CHECK_THROWS(load_embeddings("/nonexistent/vectors.txt"));
}

TEST_CASE("sentence encoding averages in-vocabulary tokens") {
  EmbeddingTable table(2);
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 2.0;
  table.insert("open", a);
  table.insert("mail", b);

  const SentenceVector sv = encode_sentence(table, "Open mail");
  CHECK(sv.values(0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sv.values(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sv.oov_fraction == 0.0);

  const SentenceVector half = encode_sentence(table, "open the mail now");
  CHECK(half.oov_fraction == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(half.values(0) == doctest::Approx(0.5).epsilon(1e-14));  // mean of hits only

  const SentenceVector none = encode_sentence(table, "unknown words only");
  CHECK(none.oov_fraction == 1.0);
  CHECK(none.values.size() == 2);
  CHECK(none.values.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("hashed random encoder is a deterministic function of dim and seed") {
  const HashedRandomEncoder enc(16, 5);
  const HashedRandomEncoder same(16, 5);
  const HashedRandomEncoder other_seed(16, 6);

  CHECK(enc.dim() == 16);
  const Vector v1 = enc.token_vector("mail");
  const Vector v2 = same.token_vector("mail");
  CHECK((v1 - v2).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((v1 - other_seed.token_vector("mail")).lpNorm<Eigen::Infinity>() > 0.0);
  CHECK((v1 - enc.token_vector("mall")).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("hashed token vectors are unit norm and never out of vocabulary") {
  const HashedRandomEncoder enc(24, 9);
  for (int i = 0; i < 50; ++i) {
    const Vector v = enc.token_vector("tok" + std::to_string(i));
    CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  }
  const SentenceVector sv = enc.encode("anything at all");
  CHECK(sv.oov_fraction == 0.0);
}

TEST_CASE("hashed sentence encoding is the mean of its token vectors") {
  const HashedRandomEncoder enc(8, 3);
  const Vector expect =
      (enc.token_vector("open") + enc.token_vector("mail")) / 2.0;
  const SentenceVector sv = enc.encode("Open MAIL");
  CHECK((sv.values - expect).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("hashed vectors spread uniformly over sign octants") {
  // pre-normalization coordinates are i.i.d. symmetric, so the sign pattern
  // of the first three coordinates must be uniform over the 8 octants
  const HashedRandomEncoder enc(16, 5);
  const int n = 4000;
  std::vector<double> counts(8, 0.0);
  for (int i = 0; i < n; ++i) {
    const Vector v = enc.token_vector("tok" + std::to_string(i));
    const int octant = (v(0) >= 0 ? 1 : 0) | (v(1) >= 0 ? 2 : 0) |
                       (v(2) >= 0 ? 4 : 0);
    counts[static_cast<std::size_t>(octant)] += 1.0;
  }
  const double expected = n / 8.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-square 0.999 quantile at 7 degrees of freedom
  CHECK(chi2 < 24.321886347856854);
}
