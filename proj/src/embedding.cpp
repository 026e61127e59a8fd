#include "intentrec/embedding.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace intentrec {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current += static_cast<char>(std::tolower(ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool EmbeddingTable::contains(const std::string& token) const {
  return entries_.count(token) > 0;
}

const Vector* EmbeddingTable::find(const std::string& token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

void EmbeddingTable::insert(const std::string& token, Vector v) {
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_)
    throw std::invalid_argument("EmbeddingTable: dimension mismatch for " +
                                token);
  entries_[token] = std::move(v);
}

EmbeddingTable load_embeddings(
    const std::string& path,
    const std::optional<std::set<std::string>>& vocab_filter) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_embeddings: cannot open " + path);

  EmbeddingTable table;
  std::string line;
  int lineno = 0;
  bool first_content_line = true;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;  // blank line

    std::vector<double> values;
    double v;
    std::string field;
    while (ls >> field) {
      std::size_t pos = 0;
      try {
        v = std::stod(field, &pos);
      } catch (const std::exception&) {
        throw std::runtime_error("load_embeddings: non-numeric field '" +
                                 field + "' at line " + std::to_string(lineno));
      }
      if (pos != field.size())
        throw std::runtime_error("load_embeddings: non-numeric field '" +
                                 field + "' at line " + std::to_string(lineno));
      values.push_back(v);
    }

    // Optional header: exactly two integers "count dim" on the first line.
    if (first_content_line && values.size() == 1 &&
        token.find_first_not_of("0123456789") == std::string::npos) {
      first_content_line = false;
      continue;
    }
    first_content_line = false;

    if (values.empty())
      throw std::runtime_error("load_embeddings: no values at line " +
                               std::to_string(lineno));
    if (table.dim() != 0 && static_cast<Index>(values.size()) != table.dim())
      throw std::runtime_error(
          "load_embeddings: dimension mismatch at line " +
          std::to_string(lineno) + " (expected " + std::to_string(table.dim()) +
          ", got " + std::to_string(values.size()) + ")");
    if (vocab_filter && vocab_filter->count(token) == 0) {
      // Dimension is still pinned and enforced for skipped tokens.
      if (table.dim() == 0)
        table = EmbeddingTable(static_cast<Index>(values.size()));
      continue;
    }
    table.insert(token, Eigen::Map<Vector>(values.data(),
                                           static_cast<Index>(values.size())));
  }
  return table;
}

SentenceVector encode_sentence(const EmbeddingTable& table,
                               const std::string& text) {
  const auto tokens = tokenize(text);
  Vector sum = Vector::Zero(table.dim());
  std::size_t in_vocab = 0;
  for (const auto& t : tokens) {
    if (const Vector* v = table.find(t)) {
      sum += *v;
      ++in_vocab;
    }
  }
  SentenceVector out;
  if (in_vocab == 0) {
    out.values = Vector::Zero(table.dim());
    out.oov_fraction = 1.0;
  } else {
    out.values = sum / static_cast<double>(in_vocab);
    out.oov_fraction =
        static_cast<double>(tokens.size() - in_vocab) / tokens.size();
  }
  return out;
}

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

HashedRandomEncoder::HashedRandomEncoder(Index dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 1)
    throw std::invalid_argument("HashedRandomEncoder: dim must be >= 1");
}

Vector HashedRandomEncoder::token_vector(const std::string& token) const {
  std::uint64_t state = fnv1a64(token) ^ seed_;
  Vector v(dim_);
  for (Index i = 0; i < dim_; ++i) {
    // uniform in [-1, 1) from the top 53 bits
    const double u =
        static_cast<double>(splitmix64(state) >> 11) / 9007199254740992.0;
    v[i] = 2.0 * u - 1.0;
  }
  const double n = v.norm();
  if (n > 0) v /= n;
  return v;
}

SentenceVector HashedRandomEncoder::encode(const std::string& text) const {
  const auto tokens = tokenize(text);
  SentenceVector out;
  out.oov_fraction = 0.0;
  if (tokens.empty()) {
    out.values = Vector::Zero(dim_);
    out.oov_fraction = 1.0;
    return out;
  }
  Vector sum = Vector::Zero(dim_);
  for (const auto& t : tokens) sum += token_vector(t);
  out.values = sum / static_cast<double>(tokens.size());
  return out;
}

}  // namespace intentrec
