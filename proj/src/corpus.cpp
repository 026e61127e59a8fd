#include "intentrec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace intentrec {

LabelVocab::LabelVocab(std::set<std::string> app_ids) {
  ids_.assign(app_ids.begin(), app_ids.end());  // set iteration is sorted
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i)
    index_.emplace(ids_[i], static_cast<int>(i));
}

const std::string& LabelVocab::id(int index) const {
  if (index < 0 || index >= size())
    throw std::out_of_range("LabelVocab: index out of range");
  return ids_[static_cast<std::size_t>(index)];
}

int LabelVocab::index(const std::string& app_id) const {
  auto it = index_.find(app_id);
  if (it == index_.end())
    throw std::out_of_range("LabelVocab: unknown app id: " + app_id);
  return it->second;
}

bool LabelVocab::contains(const std::string& app_id) const {
  return index_.count(app_id) > 0;
}

void Corpus::reindex() {
  utterance_by_id_.clear();
  utterance_by_id_.reserve(utterances.size());
  for (std::size_t i = 0; i < utterances.size(); ++i)
    utterance_by_id_.emplace(utterances[i].id, static_cast<int>(i));
}

const Utterance& Corpus::utterance_of(const Sample& s) const {
  auto it = utterance_by_id_.find(s.utterance_id);
  if (it == utterance_by_id_.end())
    throw std::out_of_range("Corpus: unresolved utterance id " +
                            s.utterance_id);
  return utterances[static_cast<std::size_t>(it->second)];
}

std::vector<int> Corpus::label_indices(const Sample& s) const {
  std::vector<int> out;
  out.reserve(s.labels.size());
  for (const auto& l : s.labels) out.push_back(vocab.index(l));
  return out;
}

Vector Corpus::multi_hot(const Sample& s) const {
  Vector v = Vector::Zero(vocab.size());
  for (int idx : label_indices(s)) v[idx] = 1.0;
  return v;
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Corpus make_corpus(std::vector<Utterance> utterances,
                   std::vector<Sample> samples) {
  Corpus c;
  c.utterances = std::move(utterances);
  c.samples = std::move(samples);

  std::set<std::string> seen_ids;
  for (const auto& u : c.utterances) {
    if (!seen_ids.insert(u.id).second)
      throw std::invalid_argument("corpus: duplicate utterance id: " + u.id);
    if (trim(u.text).empty())
      throw std::invalid_argument("corpus: empty text for utterance " + u.id);
  }
  c.reindex();

  std::set<std::string> all_labels;
  for (auto& s : c.samples) {
    if (s.labels.empty())
      throw std::invalid_argument("corpus: empty label set for utterance " +
                                  s.utterance_id);
    std::sort(s.labels.begin(), s.labels.end());
    if (std::adjacent_find(s.labels.begin(), s.labels.end()) != s.labels.end())
      throw std::invalid_argument("corpus: duplicate label for utterance " +
                                  s.utterance_id);
    all_labels.insert(s.labels.begin(), s.labels.end());
  }
  c.vocab = LabelVocab(std::move(all_labels));
  for (const auto& s : c.samples) c.utterance_of(s);  // resolvability check
  return c;
}

Corpus load_corpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_corpus: cannot open " + path);

  std::vector<Utterance> utterances;
  std::vector<Sample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("load_corpus: parse error at line " +
                               std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("text") ||
        !j.contains("apps") || !j["id"].is_string() ||
        !j["text"].is_string() || !j["apps"].is_array())
      throw std::runtime_error(
          "load_corpus: parse error at line " + std::to_string(lineno) +
          ": expected object with string id, string text, array apps");
    Utterance u{j["id"].get<std::string>(), j["text"].get<std::string>()};
    Sample s;
    s.utterance_id = u.id;
    for (const auto& a : j["apps"]) {
      if (!a.is_string())
        throw std::runtime_error("load_corpus: parse error at line " +
                                 std::to_string(lineno) +
                                 ": apps entries must be strings");
      s.labels.push_back(a.get<std::string>());
    }
    if (s.labels.empty())
      throw std::runtime_error("load_corpus: empty label set at line " +
                               std::to_string(lineno));
    utterances.push_back(std::move(u));
    samples.push_back(std::move(s));
  }
  try {
    return make_corpus(std::move(utterances), std::move(samples));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("load_corpus: ") + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("save_corpus: cannot open " + path);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& s = corpus.samples[i];
    const auto& u = corpus.utterance_of(s);
    nlohmann::ordered_json j;
    j["id"] = u.id;
    j["text"] = u.text;
    j["apps"] = s.labels;
    os << j.dump() << "\n";
  }
  if (!os) throw std::runtime_error("save_corpus: write failed: " + path);
}

CorpusSplit split_corpus(const Corpus& corpus, double train_ratio,
                         double validation_ratio, double test_ratio,
                         std::uint64_t seed) {
  if (train_ratio <= 0 || validation_ratio <= 0 || test_ratio <= 0)
    throw std::invalid_argument("split_corpus: ratios must be positive");
  if (std::abs(train_ratio + validation_ratio + test_ratio - 1.0) > 1e-9)
    throw std::invalid_argument("split_corpus: ratios must sum to 1");

  const auto n = static_cast<int>(corpus.samples.size());
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  const auto n_train = static_cast<int>(std::floor(n * train_ratio));
  const auto n_val = static_cast<int>(std::floor(n * validation_ratio));
  CorpusSplit split;
  split.train.assign(idx.begin(), idx.begin() + n_train);
  split.validation.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
  split.test.assign(idx.begin() + n_train + n_val, idx.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport report;
  report.total_samples = corpus.samples.size();
  report.total_apps = static_cast<std::size_t>(corpus.vocab.size());

  std::vector<std::size_t> per_app(static_cast<std::size_t>(corpus.vocab.size()), 0);
  for (const auto& s : corpus.samples) {
    report.apps_per_hli[static_cast<int>(s.labels.size())] += 1;
    for (int idx : corpus.label_indices(s))
      per_app[static_cast<std::size_t>(idx)] += 1;
  }
  for (std::size_t count : per_app) {
    if (count == 0) continue;  // unreachable for corpora built by make_corpus
    const int bucket_lo =
        1 + kStatsBucketWidth *
                static_cast<int>((count - 1) / kStatsBucketWidth);
    report.hlis_per_app[bucket_lo] += 1;
  }
  return report;
}

std::string stats_to_csv(const StatsReport& stats) {
  std::string out = "section,key,value\n";
  for (const auto& [size, count] : stats.apps_per_hli)
    out += "apps_per_hli," + std::to_string(size) + "," +
           std::to_string(count) + "\n";
  for (const auto& [bucket, count] : stats.hlis_per_app)
    out += "hlis_per_app," + std::to_string(bucket) + "," +
           std::to_string(count) + "\n";
  out += "totals,samples," + std::to_string(stats.total_samples) + "\n";
  out += "totals,apps," + std::to_string(stats.total_apps) + "\n";
  return out;
}

namespace {

std::string zero_padded(int value, int width) {
  std::ostringstream os;
  os << value;
  std::string s = os.str();
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

const std::vector<std::string>& filler_pool() {
  static const std::vector<std::string> pool = {"please", "can",  "you",
                                                "help",   "with", "my"};
  return pool;
}

}  // namespace

Corpus generate_synthetic(const SynthConfig& config, std::uint64_t seed) {
  if (config.n_apps < 2)
    throw std::invalid_argument("generate_synthetic: n_apps must be >= 2");
  if (config.n_samples < config.n_apps)
    throw std::invalid_argument(
        "generate_synthetic: infeasible config, need n_samples >= n_apps");
  if (config.keywords_per_app < 3)
    throw std::invalid_argument(
        "generate_synthetic: keywords_per_app must be >= 3");
  if (config.zipf_exponent < 0)
    throw std::invalid_argument(
        "generate_synthetic: zipf_exponent must be >= 0");
  if (config.label_noise < 0 || config.label_noise > 1)
    throw std::invalid_argument(
        "generate_synthetic: label_noise must be in [0,1]");
  if (config.labels_per_sample.empty())
    throw std::invalid_argument(
        "generate_synthetic: labels_per_sample distribution is empty");
  double prob_sum = 0.0;
  for (const auto& [k, p] : config.labels_per_sample) {
    if (k < 1 || k > config.n_apps)
      throw std::invalid_argument(
          "generate_synthetic: label-set size out of range");
    if (p < 0)
      throw std::invalid_argument(
          "generate_synthetic: negative probability in distribution");
    prob_sum += p;
  }
  if (prob_sum <= 0)
    throw std::invalid_argument(
        "generate_synthetic: distribution has zero mass");

  std::mt19937_64 rng(seed);
  const int id_width =
      std::max(2, static_cast<int>(std::to_string(config.n_apps - 1).size()));
  std::vector<std::string> app_ids;
  app_ids.reserve(static_cast<std::size_t>(config.n_apps));
  for (int a = 0; a < config.n_apps; ++a)
    app_ids.push_back("app" + zero_padded(a, id_width));

  // App popularity is Zipf-skewed with ids assigned in increasing popularity
  // order (appN-1 most frequent); s = 0 is uniform.
  std::vector<double> weights(static_cast<std::size_t>(config.n_apps));
  for (int a = 0; a < config.n_apps; ++a)
    weights[static_cast<std::size_t>(a)] =
        1.0 / std::pow(static_cast<double>(config.n_apps - a),
                       config.zipf_exponent);
  std::discrete_distribution<int> app_dist(weights.begin(), weights.end());

  std::vector<double> size_probs;
  std::vector<int> size_values;
  for (const auto& [k, p] : config.labels_per_sample) {
    size_values.push_back(k);
    size_probs.push_back(p);
  }
  std::discrete_distribution<int> size_dist(size_probs.begin(),
                                            size_probs.end());

  // 1-3 keywords per chosen app, weighted toward fuller draws: samples of the
  // same app then share most of their tokens, which keeps the corpus
  // separable under mean-pooled encodings.
  const int kw_max = std::min(3, config.keywords_per_app);
  std::vector<double> kw_count_weights(static_cast<std::size_t>(kw_max));
  for (int c = 1; c <= kw_max; ++c)
    kw_count_weights[static_cast<std::size_t>(c - 1)] =
        (c == kw_max) ? 0.80 : 0.20 / (kw_max - 1);
  std::discrete_distribution<int> kw_count_dist(kw_count_weights.begin(),
                                                kw_count_weights.end());
  std::discrete_distribution<int> filler_count_dist({0.70, 0.30});
  std::uniform_int_distribution<std::size_t> filler_pick(
      0, filler_pool().size() - 1);

  const int sample_width =
      std::max(4, static_cast<int>(std::to_string(config.n_samples - 1).size()));
  std::vector<Utterance> utterances;
  std::vector<Sample> samples;
  utterances.reserve(static_cast<std::size_t>(config.n_samples));
  samples.reserve(static_cast<std::size_t>(config.n_samples));

  for (int i = 0; i < config.n_samples; ++i) {
    const int k = size_values[static_cast<std::size_t>(size_dist(rng))];
    std::vector<int> apps;
    // The first n_apps samples each pin one app so that every app is
    // guaranteed at least one occurrence.
    if (i < config.n_apps) apps.push_back(i);
    while (static_cast<int>(apps.size()) < k) {
      const int a = app_dist(rng);
      if (std::find(apps.begin(), apps.end(), a) == apps.end())
        apps.push_back(a);
    }

    std::vector<std::string> tokens;
    for (int a : apps) {
      const int kw_count = 1 + kw_count_dist(rng);
      std::vector<int> kws;
      while (static_cast<int>(kws.size()) < kw_count) {
        std::uniform_int_distribution<int> kw_pick(0,
                                                   config.keywords_per_app - 1);
        const int kw = kw_pick(rng);
        if (std::find(kws.begin(), kws.end(), kw) == kws.end())
          kws.push_back(kw);
      }
      for (int kw : kws)
        tokens.push_back("kw" +
                         std::to_string(a * config.keywords_per_app + kw));
    }
    const int fillers = filler_count_dist(rng);
    for (int f = 0; f < fillers; ++f)
      tokens.push_back(filler_pool()[filler_pick(rng)]);
    std::shuffle(tokens.begin(), tokens.end(), rng);

    std::string text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t > 0) text += ' ';
      text += tokens[t];
    }

    // Label noise: the text stays compositional for the drawn apps while one
    // label is swapped for a random other app, so the recorded label no
    // longer matches the evidence. The first n_apps samples are exempt to
    // keep every app's guaranteed occurrence.
    if (config.label_noise > 0 && i >= config.n_apps &&
        static_cast<int>(apps.size()) < config.n_apps) {
      std::uniform_real_distribution<double> coin(0.0, 1.0);
      if (coin(rng) < config.label_noise) {
        std::uniform_int_distribution<std::size_t> slot(0, apps.size() - 1);
        std::uniform_int_distribution<int> other(0, config.n_apps - 1);
        const std::size_t victim = slot(rng);
        int replacement = other(rng);
        while (std::find(apps.begin(), apps.end(), replacement) != apps.end())
          replacement = other(rng);
        apps[victim] = replacement;
      }
    }

    Utterance u{"h" + zero_padded(i, sample_width), text};
    Sample s;
    s.utterance_id = u.id;
    for (int a : apps) s.labels.push_back(app_ids[static_cast<std::size_t>(a)]);
    utterances.push_back(std::move(u));
    samples.push_back(std::move(s));
  }

  return make_corpus(std::move(utterances), std::move(samples));
}

}  // namespace intentrec
