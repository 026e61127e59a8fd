#include "intentrec/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace intentrec {

PurityCoverage purity_coverage(const std::vector<int>& predicted,
                               const std::set<int>& actual) {
  if (predicted.empty())
    throw std::invalid_argument("purity_coverage: empty prediction list");
  if (actual.empty())
    throw std::invalid_argument("purity_coverage: empty actual set");
  std::set<int> seen;
  std::size_t hits = 0;
  for (int app : predicted) {
    if (!seen.insert(app).second)
      throw std::invalid_argument("purity_coverage: duplicate prediction " +
                                  std::to_string(app));
    if (actual.count(app)) ++hits;
  }
  PurityCoverage pc;
  pc.purity = static_cast<double>(hits) / static_cast<double>(predicted.size());
  pc.coverage = static_cast<double>(hits) / static_cast<double>(actual.size());
  return pc;
}

MetricsReport evaluate_model(const std::function<std::vector<int>(int)>& ranker,
                             const Corpus& corpus,
                             const std::vector<int>& sample_indices,
                             const std::vector<int>& majority, int n_max) {
  if (n_max < 1) throw std::invalid_argument("evaluate_model: n_max must be >= 1");
  if (sample_indices.empty())
    throw std::invalid_argument("evaluate_model: no samples");

  MetricsReport report;
  report.n_max = n_max;
  report.n_samples = sample_indices.size();
  std::vector<double> purity_sum(static_cast<std::size_t>(n_max), 0.0);
  std::vector<double> coverage_sum(static_cast<std::size_t>(n_max), 0.0);

  for (int idx : sample_indices) {
    const Sample& s = corpus.samples.at(static_cast<std::size_t>(idx));
    const auto labels = corpus.label_indices(s);
    const std::set<int> actual(labels.begin(), labels.end());

    std::vector<int> ranked = ranker(idx);
    std::unordered_set<int> present(ranked.begin(), ranked.end());
    if (present.size() != ranked.size())
      throw std::runtime_error("evaluate_model: ranker returned duplicates");
    for (int app : majority) {
      if (static_cast<int>(ranked.size()) >= n_max) break;
      if (present.insert(app).second) ranked.push_back(app);
    }
    if (static_cast<int>(ranked.size()) < n_max)
      throw std::runtime_error(
          "evaluate_model: fewer than n_max apps after padding");

    std::size_t hits = 0;
    for (int n = 1; n <= n_max; ++n) {
      if (actual.count(ranked[static_cast<std::size_t>(n - 1)])) ++hits;
      purity_sum[static_cast<std::size_t>(n - 1)] +=
          static_cast<double>(hits) / n;
      coverage_sum[static_cast<std::size_t>(n - 1)] +=
          static_cast<double>(hits) / static_cast<double>(actual.size());
    }
  }

  const double scale = 100.0 / static_cast<double>(report.n_samples);
  report.purity.resize(static_cast<std::size_t>(n_max));
  report.coverage.resize(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n) {
    report.purity[static_cast<std::size_t>(n)] =
        purity_sum[static_cast<std::size_t>(n)] * scale;
    report.coverage[static_cast<std::size_t>(n)] =
        coverage_sum[static_cast<std::size_t>(n)] * scale;
  }
  return report;
}

std::string metrics_to_csv(const MetricsReport& report) {
  std::string out = "metric";
  for (int n = 1; n <= report.n_max; ++n)
    out += ",top" + std::to_string(n);
  out += "\n";
  char buf[32];
  for (const char* name : {"purity", "coverage"}) {
    const auto& values =
        std::string(name) == "purity" ? report.purity : report.coverage;
    out += name;
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), ",%.2f", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string metrics_to_text(const MetricsReport& report) {
  char buf[96];
  std::string out = "   n      purity  coverage\n";
  for (int n = 1; n <= report.n_max; ++n) {
    std::snprintf(buf, sizeof(buf), "top-%-4d %7.2f  %8.2f\n", n,
                  report.purity[static_cast<std::size_t>(n - 1)],
                  report.coverage[static_cast<std::size_t>(n - 1)]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "samples: %zu\n", report.n_samples);
  out += buf;
  return out;
}

namespace {

// Decomposed view of the corpus: per label, the samples containing it.
struct Decomposition {
  std::vector<std::vector<int>> samples_of_label;  // label idx -> sample idxs
  std::vector<std::vector<int>> labels_of_sample;  // sample idx -> label idxs
};

Decomposition decompose(const Corpus& corpus) {
  Decomposition d;
  d.samples_of_label.resize(static_cast<std::size_t>(corpus.vocab.size()));
  d.labels_of_sample.resize(corpus.samples.size());
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    d.labels_of_sample[i] = corpus.label_indices(corpus.samples[i]);
    for (int l : d.labels_of_sample[i])
      d.samples_of_label[static_cast<std::size_t>(l)].push_back(
          static_cast<int>(i));
  }
  return d;
}

enum class Bucket { Unset, Support, Other };

// Two-colors the side's samples so that every label sees at least one sample
// of each color. Returns false when the side is infeasible under this order.
bool color_side(const std::vector<int>& side_labels,
                const std::vector<std::vector<int>>& label_samples,
                std::unordered_map<int, Bucket>& bucket) {
  std::vector<int> order = side_labels;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto sa = label_samples[static_cast<std::size_t>(a)].size();
    const auto sb = label_samples[static_cast<std::size_t>(b)].size();
    return sa != sb ? sa < sb : a < b;
  });
  auto place = [&](const std::vector<int>& samples, Bucket want) {
    for (int s : samples)
      if (bucket[s] == want) return true;
    for (int s : samples)
      if (bucket[s] == Bucket::Unset) {
        bucket[s] = want;
        return true;
      }
    return false;
  };
  for (int l : order) {
    const auto& samples = label_samples[static_cast<std::size_t>(l)];
    if (!place(samples, Bucket::Support)) return false;
    if (!place(samples, Bucket::Other)) return false;
  }
  return true;
}

std::optional<OneShotSplit> try_build_split(const Corpus& corpus,
                                            const Decomposition& d,
                                            const std::vector<int>& eligible,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);

  std::vector<int> shuffled = eligible;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<int> side_of_label(static_cast<std::size_t>(corpus.vocab.size()),
                                 0);
  std::vector<int> l1, l2;
  for (std::size_t i = 0; i < shuffled.size(); ++i) {
    const int side = (i % 2 == 0) ? 1 : 2;
    side_of_label[static_cast<std::size_t>(shuffled[i])] = side;
    (side == 1 ? l1 : l2).push_back(shuffled[i]);
  }

  // whole-utterance side assignment; cross-side decompositions drop out
  std::vector<int> side_of_sample(corpus.samples.size(), 0);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    int c1 = 0, c2 = 0;
    for (int l : d.labels_of_sample[i]) {
      if (side_of_label[static_cast<std::size_t>(l)] == 1) ++c1;
      if (side_of_label[static_cast<std::size_t>(l)] == 2) ++c2;
    }
    if (c1 + c2 == 0) continue;
    side_of_sample[i] = (c1 >= c2) ? 1 : 2;
  }

  // per side, per label: the samples still carrying that label, in a
  // shuffled order so retries explore different colorings
  std::vector<int> perm(corpus.samples.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<int>> label_samples(
      static_cast<std::size_t>(corpus.vocab.size()));
  for (int s : perm)
    for (int l : d.labels_of_sample[static_cast<std::size_t>(s)])
      if (side_of_label[static_cast<std::size_t>(l)] ==
          side_of_sample[static_cast<std::size_t>(s)])
        label_samples[static_cast<std::size_t>(l)].push_back(s);

  std::unordered_map<int, Bucket> bucket1, bucket2;
  if (!color_side(l1, label_samples, bucket1)) return std::nullopt;
  if (!color_side(l2, label_samples, bucket2)) return std::nullopt;

  auto pair_of = [&](int sample_idx, int label) {
    const Sample& s = corpus.samples[static_cast<std::size_t>(sample_idx)];
    return OneShotPair{s.utterance_id, corpus.utterance_of(s).text,
                       corpus.vocab.id(label)};
  };
  auto first_with = [&](int label, const std::unordered_map<int, Bucket>& b,
                        Bucket want) {
    for (int s : label_samples[static_cast<std::size_t>(label)]) {
      auto it = b.find(s);
      if (it != b.end() && it->second == want) return s;
    }
    throw std::logic_error("one-shot: coloring left a label uncovered");
  };

  OneShotSplit split;
  std::sort(l1.begin(), l1.end());
  std::sort(l2.begin(), l2.end());
  for (int l : l1) split.l1.push_back(corpus.vocab.id(l));
  for (int l : l2) split.l2.push_back(corpus.vocab.id(l));

  // side 1: one support pair per label, every train-bucket pair kept
  for (int l : l1)
    split.s1_support.push_back(pair_of(first_with(l, bucket1, Bucket::Support), l));
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    if (side_of_sample[i] != 1) continue;
    auto it = bucket1.find(static_cast<int>(i));
    if (it != bucket1.end() && it->second == Bucket::Support) continue;
    for (int l : d.labels_of_sample[i])
      if (side_of_label[static_cast<std::size_t>(l)] == 1)
        split.s1_train.push_back(pair_of(static_cast<int>(i), l));
  }

  // side 2: exactly one pair per label in each bucket, rest discarded
  for (int l : l2) {
    split.s2_support.push_back(pair_of(first_with(l, bucket2, Bucket::Support), l));
    split.s2_test.push_back(pair_of(first_with(l, bucket2, Bucket::Other), l));
  }
  return split;
}

}  // namespace

OneShotSplit build_one_shot_split(const Corpus& corpus, std::uint64_t seed,
                                  int min_hlis_per_app) {
  if (min_hlis_per_app < 2)
    throw std::invalid_argument("one-shot: min_hlis_per_app must be >= 2");
  const Decomposition d = decompose(corpus);

  std::vector<int> eligible;
  for (int l = 0; l < corpus.vocab.size(); ++l) {
    std::set<std::string> utts;
    for (int s : d.samples_of_label[static_cast<std::size_t>(l)])
      utts.insert(corpus.samples[static_cast<std::size_t>(s)].utterance_id);
    if (static_cast<int>(utts.size()) >= min_hlis_per_app)
      eligible.push_back(l);
  }
  if (eligible.empty())
    throw std::runtime_error("one-shot: no eligible labels");
  if (eligible.size() < 2)
    throw std::runtime_error(
        "one-shot: need at least 2 eligible labels to form both sides");

  for (int attempt = 0; attempt < 100; ++attempt) {
    auto split = try_build_split(corpus, d, eligible, seed + attempt);
    if (split && verify_one_shot_split(*split, corpus).empty()) return *split;
  }
  throw std::runtime_error(
      "one-shot: split constraints unsatisfiable after 100 attempts");
}

std::vector<std::string> verify_one_shot_split(const OneShotSplit& split,
                                               const Corpus& corpus) {
  std::vector<std::string> violations;
  const std::set<std::string> l1(split.l1.begin(), split.l1.end());
  const std::set<std::string> l2(split.l2.begin(), split.l2.end());

  for (const auto& app : l1)
    if (l2.count(app)) violations.push_back("label in both L1 and L2: " + app);

  // utterance id -> union of labels over the samples that reference it
  std::unordered_map<std::string, std::set<std::string>> labels_of_utt;
  std::unordered_map<std::string, std::string> text_of_utt;
  for (const auto& s : corpus.samples) {
    labels_of_utt[s.utterance_id].insert(s.labels.begin(), s.labels.end());
    text_of_utt[s.utterance_id] = corpus.utterance_of(s).text;
  }

  auto check_pairs = [&](const std::vector<OneShotPair>& pairs,
                         const std::set<std::string>& side_labels,
                         const std::string& name) {
    for (const auto& p : pairs) {
      if (!side_labels.count(p.app))
        violations.push_back(name + ": label " + p.app +
                             " outside its side set (utterance " +
                             p.utterance_id + ")");
      auto it = labels_of_utt.find(p.utterance_id);
      if (it == labels_of_utt.end()) {
        violations.push_back(name + ": unknown utterance " + p.utterance_id);
        continue;
      }
      if (!it->second.count(p.app))
        violations.push_back(name + ": utterance " + p.utterance_id +
                             " does not carry label " + p.app);
      if (text_of_utt.at(p.utterance_id) != p.text)
        violations.push_back(name + ": text mismatch for utterance " +
                             p.utterance_id);
    }
  };
  check_pairs(split.s1_support, l1, "s1_support");
  check_pairs(split.s1_train, l1, "s1_train");
  check_pairs(split.s2_support, l2, "s2_support");
  check_pairs(split.s2_test, l2, "s2_test");

  auto utt_ids = [](const std::vector<OneShotPair>& pairs) {
    std::set<std::string> ids;
    for (const auto& p : pairs) ids.insert(p.utterance_id);
    return ids;
  };
  const auto s1s = utt_ids(split.s1_support);
  const auto s1t = utt_ids(split.s1_train);
  const auto s2s = utt_ids(split.s2_support);
  const auto s2t = utt_ids(split.s2_test);

  std::set<std::string> side1 = s1s, side2 = s2s;
  side1.insert(s1t.begin(), s1t.end());
  side2.insert(s2t.begin(), s2t.end());
  for (const auto& id : side1)
    if (side2.count(id))
      violations.push_back("utterance shared across sides: " + id);
  for (const auto& id : s1s)
    if (s1t.count(id))
      violations.push_back("utterance in both s1_support and s1_train: " + id);
  for (const auto& id : s2s)
    if (s2t.count(id))
      violations.push_back("utterance in both s2_support and s2_test: " + id);

  auto label_counts = [](const std::vector<OneShotPair>& pairs) {
    std::map<std::string, int> counts;
    for (const auto& p : pairs) ++counts[p.app];
    return counts;
  };
  const auto c1s = label_counts(split.s1_support);
  const auto c1t = label_counts(split.s1_train);
  const auto c2s = label_counts(split.s2_support);
  const auto c2t = label_counts(split.s2_test);
  for (const auto& app : l1) {
    if (!c1s.count(app))
      violations.push_back("L1 label missing from s1_support: " + app);
    if (!c1t.count(app))
      violations.push_back("L1 label missing from s1_train: " + app);
  }
  for (const auto& app : l2) {
    const auto in = [&](const std::map<std::string, int>& c) {
      auto it = c.find(app);
      return it == c.end() ? 0 : it->second;
    };
    if (in(c2s) != 1)
      violations.push_back("L2 label not exactly once in s2_support: " + app);
    if (in(c2t) != 1)
      violations.push_back("L2 label not exactly once in s2_test: " + app);
  }
  return violations;
}

std::vector<double> one_shot_evaluate(
    const std::function<std::vector<std::string>(const OneShotPair&)>& ranker,
    const OneShotSplit& split, int n_max) {
  if (n_max < 1)
    throw std::invalid_argument("one_shot_evaluate: n_max must be >= 1");
  if (split.s2_test.empty())
    throw std::invalid_argument("one_shot_evaluate: empty test side");

  std::vector<std::size_t> correct(static_cast<std::size_t>(n_max), 0);
  for (const auto& pair : split.s2_test) {
    const auto ranked = ranker(pair);
    int pos = -1;
    for (std::size_t i = 0; i < ranked.size(); ++i)
      if (ranked[i] == pair.app) {
        pos = static_cast<int>(i);
        break;
      }
    if (pos < 0) continue;
    for (int n = pos + 1; n <= n_max; ++n)
      ++correct[static_cast<std::size_t>(n - 1)];
  }
  std::vector<double> accuracy(static_cast<std::size_t>(n_max));
  for (int n = 0; n < n_max; ++n)
    accuracy[static_cast<std::size_t>(n)] =
        static_cast<double>(correct[static_cast<std::size_t>(n)]) /
        static_cast<double>(split.s2_test.size());
  return accuracy;
}

namespace {

nlohmann::ordered_json pairs_to_json(const std::vector<OneShotPair>& pairs) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : pairs)
    arr.push_back({{"utterance_id", p.utterance_id},
                   {"text", p.text},
                   {"app", p.app}});
  return arr;
}

std::vector<OneShotPair> pairs_from_json(const nlohmann::json& arr,
                                         const std::string& field) {
  if (!arr.is_array())
    throw std::runtime_error("one-shot split: " + field + " must be an array");
  std::vector<OneShotPair> pairs;
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("utterance_id") || !e.contains("text") ||
        !e.contains("app") || !e["utterance_id"].is_string() ||
        !e["text"].is_string() || !e["app"].is_string())
      throw std::runtime_error("one-shot split: malformed entry in " + field);
    pairs.push_back({e["utterance_id"].get<std::string>(),
                     e["text"].get<std::string>(),
                     e["app"].get<std::string>()});
  }
  return pairs;
}

}  // namespace

std::string one_shot_split_to_json(const OneShotSplit& split) {
  nlohmann::ordered_json j;
  j["l1"] = split.l1;
  j["l2"] = split.l2;
  j["s1_support"] = pairs_to_json(split.s1_support);
  j["s1_train"] = pairs_to_json(split.s1_train);
  j["s2_support"] = pairs_to_json(split.s2_support);
  j["s2_test"] = pairs_to_json(split.s2_test);
  return j.dump(2) + "\n";
}

OneShotSplit one_shot_split_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("one-shot split: ") + e.what());
  }
  for (const char* field : {"l1", "l2"})
    if (!j.contains(field) || !j[field].is_array())
      throw std::runtime_error(std::string("one-shot split: missing ") + field);
  OneShotSplit split;
  for (const auto& v : j["l1"]) split.l1.push_back(v.get<std::string>());
  for (const auto& v : j["l2"]) split.l2.push_back(v.get<std::string>());
  split.s1_support = pairs_from_json(j.value("s1_support", nlohmann::json::array()), "s1_support");
  split.s1_train = pairs_from_json(j.value("s1_train", nlohmann::json::array()), "s1_train");
  split.s2_support = pairs_from_json(j.value("s2_support", nlohmann::json::array()), "s2_support");
  split.s2_test = pairs_from_json(j.value("s2_test", nlohmann::json::array()), "s2_test");
  return split;
}

}  // namespace intentrec
