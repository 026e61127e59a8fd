#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "intentrec/corpus.hpp"

namespace intentrec {

struct PurityCoverage {
  double purity = 0.0;    // |predicted ∩ actual| / |predicted|
  double coverage = 0.0;  // |predicted ∩ actual| / |actual|
};

// `predicted` is an ordered ranking (no duplicates), `actual` the true label
// set (non-empty).
PurityCoverage purity_coverage(const std::vector<int>& predicted,
                               const std::set<int>& actual);

// Per-n means over samples, as percentages.
struct MetricsReport {
  int n_max = 10;
  std::size_t n_samples = 0;
  std::vector<double> purity;    // index n-1 holds the top-n value
  std::vector<double> coverage;
};

// `ranker` maps a corpus sample index to a ranked, duplicate-free app-index
// list. Rankings shorter than n_max are padded from the majority list
// (skipping apps already present); running out of padding is an error.
MetricsReport evaluate_model(const std::function<std::vector<int>(int)>& ranker,
                             const Corpus& corpus,
                             const std::vector<int>& sample_indices,
                             const std::vector<int>& majority, int n_max);

// CSV: header `metric,top1,...,top<n_max>`, one row per metric, 2 decimals.
std::string metrics_to_csv(const MetricsReport& report);
// Aligned table: one top-n row per line, purity and coverage columns.
std::string metrics_to_text(const MetricsReport& report);

// --- 1-shot unseen-label protocol ---

// A single-label decomposition of a corpus sample.
struct OneShotPair {
  std::string utterance_id;
  std::string text;
  std::string app;
  bool operator==(const OneShotPair&) const = default;
};

struct OneShotSplit {
  std::vector<std::string> l1, l2;  // disjoint app-id sets, sorted
  std::vector<OneShotPair> s1_support, s1_train;
  std::vector<OneShotPair> s2_support, s2_test;
};

// Constructive split: eligible apps (>= min_hlis_per_app HLIs) alternate
// between L1 and L2 after a seeded shuffle; utterances are assigned wholly
// to one side and then wholly to one bucket within the side, which makes the
// utterance-disjointness constraints hold by construction. Side-2 buckets
// keep exactly one pair per label. Retries internally with seed+1 (up to
// 100 attempts) before giving up.
OneShotSplit build_one_shot_split(const Corpus& corpus, std::uint64_t seed,
                                  int min_hlis_per_app = 3);

// All constraint violations, empty when the split is valid.
std::vector<std::string> verify_one_shot_split(const OneShotSplit& split,
                                               const Corpus& corpus);

// `ranker` must already hold S2_support as its support/memory and rank only
// labels present there. Returns accuracy@1..n_max as fractions: the share of
// S2_test pairs whose app appears in the top n.
std::vector<double> one_shot_evaluate(
    const std::function<std::vector<std::string>(const OneShotPair&)>& ranker,
    const OneShotSplit& split, int n_max);

std::string one_shot_split_to_json(const OneShotSplit& split);
OneShotSplit one_shot_split_from_json(const std::string& text);

}  // namespace intentrec
