#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "intentrec/types.hpp"

namespace intentrec {

struct Utterance {
  std::string id;
  std::string text;
  bool operator==(const Utterance&) const = default;
};

// One data point: an utterance paired with the non-empty set of app labels
// that realize it. Labels are kept sorted and unique.
struct Sample {
  std::string utterance_id;
  std::vector<std::string> labels;
  bool operator==(const Sample&) const = default;
};

// Bijective app-id <-> dense index map. Indices are assigned in ascending
// app-id order, so index order doubles as the tie-break order used by all
// rankers.
class LabelVocab {
 public:
  LabelVocab() = default;
  explicit LabelVocab(std::set<std::string> app_ids);

  int size() const { return static_cast<int>(ids_.size()); }
  const std::string& id(int index) const;
  int index(const std::string& app_id) const;
  bool contains(const std::string& app_id) const;
  const std::vector<std::string>& ids() const { return ids_; }
  bool operator==(const LabelVocab& other) const { return ids_ == other.ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
};

struct Corpus {
  std::vector<Utterance> utterances;
  std::vector<Sample> samples;
  LabelVocab vocab;

  const Utterance& utterance_of(const Sample& s) const;
  std::vector<int> label_indices(const Sample& s) const;
  Vector multi_hot(const Sample& s) const;
  bool operator==(const Corpus& other) const {
    return utterances == other.utterances && samples == other.samples &&
           vocab == other.vocab;
  }

  // Rebuilds the utterance lookup; called by the constructors below.
  void reindex();

 private:
  std::unordered_map<std::string, int> utterance_by_id_;
};

// Validates all invariants (unique ids, non-empty labels, resolvable
// references) and builds the vocab from the union of sample labels.
Corpus make_corpus(std::vector<Utterance> utterances,
                   std::vector<Sample> samples);

// One JSON object per line: {"id":...,"text":...,"apps":[...]}.
// Blank lines are ignored; anything else is a parse error with line number.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

struct CorpusSplit {
  std::vector<int> train;
  std::vector<int> validation;
  std::vector<int> test;
};

// Deterministic shuffle split; sizes are floor(N*r) for train and validation
// with the remainder going to test.
CorpusSplit split_corpus(const Corpus& corpus, double train_ratio,
                         double validation_ratio, double test_ratio,
                         std::uint64_t seed);

struct StatsReport {
  // label-set size -> number of samples
  std::map<int, std::size_t> apps_per_hli;
  // bucketed occurrence counts, keyed by bucket lower bound; width 48
  // matching [1,49), [49,97), ...
  std::map<int, std::size_t> hlis_per_app;
  std::size_t total_samples = 0;
  std::size_t total_apps = 0;
};

constexpr int kStatsBucketWidth = 48;

StatsReport corpus_stats(const Corpus& corpus);

// section,key,value rows: apps_per_hli, hlis_per_app (bucket lower bounds),
// then the totals.
std::string stats_to_csv(const StatsReport& stats);

struct SynthConfig {
  int n_apps = 12;
  int n_samples = 200;
  double zipf_exponent = 0.1;
  // small pool: samples draw 1-3 of these, and a small pool keeps samples of
  // the same app sharing tokens, which is what "separable" means for
  // token-overlap encoders
  int keywords_per_app = 3;
  // label-set size -> probability; normalized internally
  std::vector<std::pair<int, double>> labels_per_sample = {
      {1, 0.40}, {2, 0.45}, {3, 0.15}};
  // probability that one label of a sample is swapped for a random other app
  double label_noise = 0.0;
};

// Keyword-compositional corpus: each app owns a disjoint keyword set and a
// sample's text is built from the keywords of its labels, so separability is
// controllable. Every app is guaranteed at least one sample. Pure function
// of (config, seed).
Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed);

}  // namespace intentrec
