#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "intentrec/types.hpp"

namespace intentrec {

// Lowercases and splits on maximal runs of non-alphanumeric characters.
std::vector<std::string> tokenize(const std::string& text);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Index dim) : dim_(dim) {}

  Index dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& token) const;
  const Vector* find(const std::string& token) const;
  void insert(const std::string& token, Vector v);

 private:
  Index dim_ = 0;
  std::unordered_map<std::string, Vector> entries_;
};

// Text format: optional "count dim" header line, then "token v1 ... vd"
// per line. The dimension is inferred from the first vector line and
// enforced afterwards. With a filter, only listed tokens are retained.
EmbeddingTable load_embeddings(
    const std::string& path,
    const std::optional<std::set<std::string>>& vocab_filter = std::nullopt);

struct SentenceVector {
  Vector values;
  double oov_fraction = 0.0;
};

class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual Index dim() const = 0;
  virtual SentenceVector encode(const std::string& text) const = 0;
};

// Mean of the embeddings of in-vocabulary tokens; tokens without an entry
// are skipped and counted into oov_fraction. A sentence with no
// in-vocabulary tokens encodes to the zero vector with oov_fraction 1.
SentenceVector encode_sentence(const EmbeddingTable& table,
                               const std::string& text);

class AveragingEncoder : public SentenceEncoder {
 public:
  explicit AveragingEncoder(EmbeddingTable table) : table_(std::move(table)) {}
  Index dim() const override { return table_.dim(); }
  SentenceVector encode(const std::string& text) const override {
    return encode_sentence(table_, text);
  }
  const EmbeddingTable& table() const { return table_; }

 private:
  EmbeddingTable table_;
};

// Deterministic stand-in for a pretrained table: every token maps to a
// unit-norm vector derived from a 64-bit hash of the token and the seed.
// No token is ever out of vocabulary.
class HashedRandomEncoder : public SentenceEncoder {
 public:
  HashedRandomEncoder(Index dim, std::uint64_t seed);
  Index dim() const override { return dim_; }
  SentenceVector encode(const std::string& text) const override;
  Vector token_vector(const std::string& token) const;

 private:
  Index dim_;
  std::uint64_t seed_;
};

}  // namespace intentrec
