#include "intentrec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "intentrec/eval.hpp"

namespace intentrec {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("invalid value for " + key + ": '" + value + "'");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  const long long v = parse_int(key, value);
  if (v < 0) bad_value(key, value);
  return static_cast<std::uint64_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(key, value);
  }
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(current);
  return parts;
}

std::vector<std::pair<int, double>> parse_label_dist(const std::string& key,
                                                     const std::string& value) {
  std::vector<std::pair<int, double>> dist;
  for (const auto& part : split_on(value, ',')) {
    const auto kv = split_on(trim(part), ':');
    if (kv.size() != 2) bad_value(key, value);
    dist.emplace_back(static_cast<int>(parse_int(key, trim(kv[0]))),
                      parse_double(key, trim(kv[1])));
  }
  return dist;
}

ModelKind parse_model_kind(const std::string& value) {
  if (value == "majority") return ModelKind::Majority;
  if (value == "oracle") return ModelKind::Oracle;
  if (value == "nn") return ModelKind::Nn;
  if (value == "ffnn") return ModelKind::Ffnn;
  if (value == "memnet") return ModelKind::MemNet;
  if (value == "matchnet") return ModelKind::MatchNet;
  if (value == "hybrid") return ModelKind::Hybrid;
  bad_value("model.kind", value);
}

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Majority: return "majority";
    case ModelKind::Oracle: return "oracle";
    case ModelKind::Nn: return "nn";
    case ModelKind::Ffnn: return "ffnn";
    case ModelKind::MemNet: return "memnet";
    case ModelKind::MatchNet: return "matchnet";
    case ModelKind::Hybrid: return "hybrid";
  }
  return "?";
}

void apply_key(ExperimentConfig& cfg, const std::string& key,
               const std::string& value) {
  if (key == "corpus.source") {
    if (value == "file") cfg.source = CorpusSource::File;
    else if (value == "synth") cfg.source = CorpusSource::Synth;
    else bad_value(key, value);
  } else if (key == "corpus.path") {
    cfg.corpus_path = value;
  } else if (key == "corpus.synth.n_apps") {
    cfg.synth.n_apps = static_cast<int>(parse_int(key, value));
  } else if (key == "corpus.synth.n_samples") {
    cfg.synth.n_samples = static_cast<int>(parse_int(key, value));
  } else if (key == "corpus.synth.zipf_exponent") {
    cfg.synth.zipf_exponent = parse_double(key, value);
  } else if (key == "corpus.synth.keywords_per_app") {
    cfg.synth.keywords_per_app = static_cast<int>(parse_int(key, value));
  } else if (key == "corpus.synth.label_noise") {
    cfg.synth.label_noise = parse_double(key, value);
  } else if (key == "corpus.synth.labels_per_sample") {
    cfg.synth.labels_per_sample = parse_label_dist(key, value);
  } else if (key == "corpus.synth.seed") {
    cfg.synth_seed = parse_uint(key, value);
  } else if (key == "embeddings.path") {
    cfg.embeddings = value;
  } else if (key == "model.kind") {
    cfg.model = parse_model_kind(value);
  } else if (key == "model.hops") {
    cfg.hops = static_cast<int>(parse_int(key, value));
  } else if (key == "model.share_ab") {
    cfg.share_ab = parse_bool(key, value);
  } else if (key == "model.nonlinear") {
    cfg.nonlinear = parse_bool(key, value);
  } else if (key == "model.head_layers") {
    cfg.head_layers = static_cast<int>(parse_int(key, value));
  } else if (key == "model.head_hidden") {
    cfg.head_hidden = static_cast<Index>(parse_int(key, value));
  } else if (key == "model.share_fg") {
    cfg.share_fg = parse_bool(key, value);
  } else if (key == "model.hidden") {
    cfg.hidden = static_cast<Index>(parse_int(key, value));
  } else if (key == "model.hidden_layers") {
    cfg.ffnn_hidden.clear();
    if (!trim(value).empty())
      for (const auto& part : split_on(value, ','))
        cfg.ffnn_hidden.push_back(
            static_cast<Index>(parse_int(key, trim(part))));
  } else if (key == "model.output") {
    if (value == "sigmoid_sse") cfg.ffnn_output = FfnnOutputMode::SigmoidSse;
    else if (value == "softmax_ce") cfg.ffnn_output = FfnnOutputMode::SoftmaxCe;
    else bad_value(key, value);
  } else if (key == "model.distance") {
    if (value == "euclidean") cfg.nn.distance = NnDistance::Euclidean;
    else if (value == "cosine") cfg.nn.distance = NnDistance::Cosine;
    else bad_value(key, value);
  } else if (key == "model.reduce") {
    if (value == "min") cfg.nn.reduce = NnReduce::Min;
    else if (value == "mean") cfg.nn.reduce = NnReduce::Mean;
    else bad_value(key, value);
  } else if (key == "split.train") {
    cfg.split_train = parse_double(key, value);
  } else if (key == "split.validation") {
    cfg.split_validation = parse_double(key, value);
  } else if (key == "split.test") {
    cfg.split_test = parse_double(key, value);
  } else if (key == "split.seed") {
    cfg.split_seed = parse_uint(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_uint(key, value);
  } else if (key == "train.batch_size") {
    cfg.train.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "train.learning_rate") {
    cfg.train.learning_rate = parse_double(key, value);
  } else if (key == "train.max_epochs") {
    cfg.train.max_epochs = static_cast<int>(parse_int(key, value));
  } else if (key == "train.patience") {
    cfg.train.patience = static_cast<int>(parse_int(key, value));
  } else if (key == "train.n_restarts") {
    cfg.train.n_restarts = static_cast<int>(parse_int(key, value));
  } else if (key == "train.monitor") {
    if (value == "top1_purity") cfg.train.monitor = MonitorMetric::Top1Purity;
    else if (value == "top3_purity") cfg.train.monitor = MonitorMetric::Top3Purity;
    else if (value == "validation_loss")
      cfg.train.monitor = MonitorMetric::ValidationLoss;
    else bad_value(key, value);
  } else if (key == "train.seed") {
    cfg.train_seed = parse_uint(key, value);
  } else if (key == "eval.n_max") {
    cfg.n_max = static_cast<int>(parse_int(key, value));
  } else if (key == "oneshot.min_hlis") {
    cfg.oneshot_min_hlis = static_cast<int>(parse_int(key, value));
  } else if (key == "oneshot.val_fraction") {
    cfg.oneshot_val_fraction = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    apply_key(cfg, key, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

namespace {

struct RandomStub {
  Index dim;
  std::uint64_t seed;
};

std::optional<RandomStub> parse_random_stub(const std::string& spec) {
  if (spec.rfind("random:", 0) != 0) return std::nullopt;
  const auto parts = split_on(spec, ':');
  if (parts.size() != 3)
    throw ConfigError("embeddings.path: expected random:<dim>:<seed>, got '" +
                      spec + "'");
  RandomStub stub;
  stub.dim = static_cast<Index>(parse_int("embeddings.path (dim)", parts[1]));
  stub.seed = parse_uint("embeddings.path (seed)", parts[2]);
  if (stub.dim < 1)
    throw ConfigError("embeddings.path: random stub dim must be >= 1");
  return stub;
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.source == CorpusSource::File) {
    if (cfg.corpus_path.empty())
      throw ConfigError("corpus.source = file requires corpus.path");
  } else {
    if (!cfg.corpus_path.empty())
      throw ConfigError("corpus.path conflicts with corpus.source = synth");
    const auto& s = cfg.synth;
    if (s.n_apps < 1) throw ConfigError("corpus.synth.n_apps must be >= 1");
    if (s.n_samples < s.n_apps)
      throw ConfigError("corpus.synth.n_samples must be >= n_apps");
    if (s.keywords_per_app < 1)
      throw ConfigError("corpus.synth.keywords_per_app must be >= 1");
    if (s.zipf_exponent < 0.0)
      throw ConfigError("corpus.synth.zipf_exponent must be >= 0");
    if (s.label_noise < 0.0 || s.label_noise > 1.0)
      throw ConfigError("corpus.synth.label_noise must be in [0,1]");
    if (s.labels_per_sample.empty())
      throw ConfigError("corpus.synth.labels_per_sample must be non-empty");
    double prob_sum = 0.0;
    for (const auto& [size, prob] : s.labels_per_sample) {
      if (size < 1 || size > s.n_apps)
        throw ConfigError(
            "corpus.synth.labels_per_sample sizes must be in [1, n_apps]");
      if (prob < 0.0)
        throw ConfigError(
            "corpus.synth.labels_per_sample probabilities must be >= 0");
      prob_sum += prob;
    }
    if (!(prob_sum > 0.0))
      throw ConfigError(
          "corpus.synth.labels_per_sample probabilities must sum > 0");
  }

  if (cfg.embeddings.empty()) throw ConfigError("embeddings.path is required");
  parse_random_stub(cfg.embeddings);  // validates the stub form

  if (cfg.hops < 1) throw ConfigError("model.hops must be >= 1");
  if (cfg.head_layers != 1 && cfg.head_layers != 2)
    throw ConfigError("model.head_layers must be 1 or 2");
  if (cfg.head_hidden < 1) throw ConfigError("model.head_hidden must be >= 1");
  if (cfg.hidden < 1) throw ConfigError("model.hidden must be >= 1");
  for (Index h : cfg.ffnn_hidden)
    if (h < 1) throw ConfigError("model.hidden_layers entries must be >= 1");

  if (!(cfg.split_train > 0.0) || !(cfg.split_validation > 0.0) ||
      !(cfg.split_test > 0.0))
    throw ConfigError("split ratios must be > 0");
  if (std::abs(cfg.split_train + cfg.split_validation + cfg.split_test - 1.0) >
      1e-9)
    throw ConfigError("split ratios must sum to 1");

  if (cfg.train.batch_size < 1)
    throw ConfigError("train.batch_size must be >= 1");
  if (!(cfg.train.learning_rate > 0.0))
    throw ConfigError("train.learning_rate must be > 0");
  if (cfg.train.max_epochs < 1)
    throw ConfigError("train.max_epochs must be >= 1");
  if (cfg.train.patience < 1) throw ConfigError("train.patience must be >= 1");
  if (cfg.train.n_restarts < 1)
    throw ConfigError("train.n_restarts must be >= 1");

  if (cfg.n_max < 1) throw ConfigError("eval.n_max must be >= 1");
  if (cfg.oneshot_min_hlis < 2)
    throw ConfigError("oneshot.min_hlis must be >= 2");
  if (!(cfg.oneshot_val_fraction > 0.0) || !(cfg.oneshot_val_fraction < 1.0))
    throw ConfigError("oneshot.val_fraction must be in (0,1)");
}

std::unique_ptr<SentenceEncoder> make_encoder(const std::string& spec) {
  if (const auto stub = parse_random_stub(spec))
    return std::make_unique<HashedRandomEncoder>(stub->dim, stub->seed);
  return std::make_unique<AveragingEncoder>(load_embeddings(spec));
}

namespace {

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Corpus get_corpus(const ExperimentConfig& cfg) {
  if (cfg.source == CorpusSource::File) return load_corpus(cfg.corpus_path);
  return generate_synthetic(cfg.synth, cfg.synth_seed.value_or(cfg.seed));
}

std::unique_ptr<TrainableModel> build_trainable(const ExperimentConfig& cfg,
                                                Index dim, Index vocab,
                                                std::uint64_t seed) {
  switch (cfg.model) {
    case ModelKind::Ffnn:
      return make_ffnn_trainable(dim, vocab, cfg.ffnn_hidden, cfg.ffnn_output,
                                 seed);
    case ModelKind::MemNet: {
      MemNetConfig mc;
      mc.hops = cfg.hops;
      mc.dim = dim;
      mc.vocab = vocab;
      mc.share_ab = cfg.share_ab;
      mc.nonlinear = cfg.nonlinear;
      mc.head_layers = cfg.head_layers;
      mc.head_hidden = cfg.head_hidden;
      return make_memnet_model(mc, seed);
    }
    case ModelKind::MatchNet:
    case ModelKind::Hybrid: {
      MatchNetConfig mc;
      mc.hops = cfg.model == ModelKind::MatchNet ? 1 : cfg.hops;
      mc.dim = dim;
      mc.hidden = cfg.hidden;
      mc.vocab = vocab;
      mc.share_fg = cfg.share_fg;
      return make_matchnet_model(mc, seed);
    }
    default:
      throw std::logic_error("build_trainable: not a trainable model kind");
  }
}

void save_model_checkpoint(TrainableModel& model,
                           const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  ParamRefs refs = model.param_refs();
  save_checkpoint(tmp.string(), refs);
  std::filesystem::rename(tmp, path);
}

std::vector<int> merged_sorted(const std::vector<int>& a,
                               const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.source != CorpusSource::Synth)
    throw ConfigError("gen-data requires corpus.source = synth");
  const Corpus corpus =
      generate_synthetic(cfg.synth, cfg.synth_seed.value_or(cfg.seed));
  const std::filesystem::path out(out_dir);

  const std::filesystem::path corpus_path = out / "corpus.jsonl";
  const std::filesystem::path tmp = corpus_path.string() + ".tmp";
  save_corpus(corpus, tmp.string());
  std::filesystem::rename(tmp, corpus_path);

  write_file_atomic(out / "stats.csv", stats_to_csv(corpus_stats(corpus)));
  std::cout << "wrote " << corpus_path.string() << " ("
            << corpus.samples.size() << " samples, " << corpus.vocab.size()
            << " apps)\n";
}

void cmd_stats(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Corpus corpus = get_corpus(cfg);
  const std::string csv = stats_to_csv(corpus_stats(corpus));
  write_file_atomic(std::filesystem::path(out_dir) / "stats.csv", csv);
  std::cout << csv;
}

void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const std::filesystem::path out(out_dir);
  const Corpus corpus = get_corpus(cfg);
  if (corpus.vocab.size() < cfg.n_max)
    throw std::runtime_error("eval.n_max exceeds the vocabulary size");
  const CorpusSplit split =
      split_corpus(corpus, cfg.split_train, cfg.split_validation,
                   cfg.split_test, cfg.split_seed.value_or(cfg.seed));
  const auto encoder = make_encoder(cfg.embeddings);

  MetricsReport report;
  std::string history_csv = "restart,epoch,train_loss,val_metric\n";

  const bool baseline = cfg.model == ModelKind::Majority ||
                        cfg.model == ModelKind::Oracle ||
                        cfg.model == ModelKind::Nn;
  if (baseline) {
    // baselines don't tune anything, so validation folds into training
    const std::vector<int> train_idx =
        merged_sorted(split.train, split.validation);
    const MajorityModel maj = majority_rank(corpus, train_idx);

    std::function<std::vector<int>(int)> ranker;
    if (cfg.model == ModelKind::Majority) {
      ranker = [&](int) { return maj.ranked; };
    } else if (cfg.model == ModelKind::Oracle) {
      std::set<int> train_labels;
      for (int idx : train_idx)
        for (int l : corpus.label_indices(
                 corpus.samples[static_cast<std::size_t>(idx)]))
          train_labels.insert(l);
      ranker = [&, train_labels](int idx) {
        const auto labels = corpus.label_indices(
            corpus.samples[static_cast<std::size_t>(idx)]);
        return oracle_predict(std::set<int>(labels.begin(), labels.end()),
                              train_labels, maj, cfg.n_max);
      };
    } else {
      const AppProfileIndex index =
          nn_index_build(*encoder, corpus, train_idx);
      ranker = [&, index](int idx) {
        const Sample& s = corpus.samples[static_cast<std::size_t>(idx)];
        const Vector q = encoder->encode(corpus.utterance_of(s).text).values;
        std::vector<int> apps;
        for (const auto& [app, score] :
             nn_predict(index, q, cfg.n_max, cfg.nn))
          apps.push_back(app);
        return apps;
      };
    }
    report = evaluate_model(ranker, corpus, split.test, maj.ranked, cfg.n_max);
  } else {
    const EncodedDataset train_ds =
        encode_dataset(corpus, split.train, *encoder);
    const EncodedDataset val_ds =
        encode_dataset(corpus, split.validation, *encoder);
    auto model = build_trainable(cfg, encoder->dim(), corpus.vocab.size(),
                                 cfg.train_seed.value_or(cfg.seed));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train_seed.value_or(cfg.seed);
    const TrainResult result = train(*model, train_ds, val_ds, tc);
    history_csv = history_to_csv(result.histories);
    save_model_checkpoint(*model, out / "checkpoint.bin");

    const SupportSet support{train_ds.X, train_ds.Y};
    const MajorityModel maj = majority_rank(corpus, split.train);
    const auto ranker = [&](int idx) {
      const Sample& s = corpus.samples[static_cast<std::size_t>(idx)];
      const Vector q = encoder->encode(corpus.utterance_of(s).text).values;
      return model->rank(support, q);
    };
    report = evaluate_model(ranker, corpus, split.test, maj.ranked, cfg.n_max);
  }

  write_file_atomic(out / "history.csv", history_csv);
  write_file_atomic(out / "report.csv", metrics_to_csv(report));
  const std::string text = metrics_to_text(report);
  write_file_atomic(out / "report.txt", text);
  std::cout << "model: " << model_kind_name(cfg.model) << "\n" << text;
}

namespace {

struct EncodedPairs {
  Matrix X;
  Matrix Y;
};

EncodedPairs encode_pairs(const std::vector<OneShotPair>& pairs,
                          const Corpus& corpus, const SentenceEncoder& encoder) {
  EncodedPairs out;
  out.X.resize(static_cast<Index>(pairs.size()), encoder.dim());
  out.Y = Matrix::Zero(static_cast<Index>(pairs.size()), corpus.vocab.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.X.row(static_cast<Index>(i)) =
        encoder.encode(pairs[i].text).values.transpose();
    out.Y(static_cast<Index>(i), corpus.vocab.index(pairs[i].app)) = 1.0;
  }
  return out;
}

std::string oneshot_csv(int n_max, const std::string& row1_name,
                        const std::vector<double>& acc1,
                        const std::string& row2_name,
                        const std::vector<double>& acc2) {
  std::string out = "model";
  for (int n = 1; n <= n_max; ++n) out += ",top" + std::to_string(n);
  out += "\n";
  char buf[32];
  const auto append_row = [&](const std::string& name,
                              const std::vector<double>& acc) {
    out += name;
    for (double a : acc) {
      std::snprintf(buf, sizeof(buf), ",%.2f", a * 100.0);
      out += buf;
    }
    out += "\n";
  };
  append_row(row1_name, acc1);
  append_row(row2_name, acc2);
  return out;
}

std::string oneshot_text(const OneShotSplit& split,
                         const std::vector<std::string>& violations, int n_max,
                         const std::string& row1_name,
                         const std::vector<double>& acc1,
                         const std::string& row2_name,
                         const std::vector<double>& acc2) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "one-shot split: |L1|=%zu |L2|=%zu |S1_support|=%zu "
                "|S1_train|=%zu |S2_support|=%zu |S2_test|=%zu\n",
                split.l1.size(), split.l2.size(), split.s1_support.size(),
                split.s1_train.size(), split.s2_support.size(),
                split.s2_test.size());
  std::string out = buf;
  if (violations.empty()) {
    out += "verifier: no violations\n\n";
  } else {
    out += "verifier: " + std::to_string(violations.size()) + " violations\n";
    for (const auto& v : violations) out += "  " + v + "\n";
    out += "\n";
  }
  out += "model     ";
  for (int n = 1; n <= n_max; ++n) {
    std::snprintf(buf, sizeof(buf), "  acc@%-3d", n);
    out += buf;
  }
  out += "\n";
  const auto append_row = [&](const std::string& name,
                              const std::vector<double>& acc) {
    std::snprintf(buf, sizeof(buf), "%-10s", name.c_str());
    out += buf;
    for (double a : acc) {
      std::snprintf(buf, sizeof(buf), "  %7.2f", a * 100.0);
      out += buf;
    }
    out += "\n";
  };
  append_row(row1_name, acc1);
  append_row(row2_name, acc2);
  return out;
}

}  // namespace

void cmd_oneshot(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.model != ModelKind::MatchNet && cfg.model != ModelKind::Hybrid)
    throw ConfigError("oneshot requires model.kind = matchnet or hybrid");
  const std::filesystem::path out(out_dir);
  const Corpus corpus = get_corpus(cfg);
  const auto encoder = make_encoder(cfg.embeddings);

  const OneShotSplit split =
      build_one_shot_split(corpus, cfg.seed, cfg.oneshot_min_hlis);
  const auto violations = verify_one_shot_split(split, corpus);
  write_file_atomic(out / "split.json", one_shot_split_to_json(split));

  // side-1 training: fixed support bank, early stopping on a carve-out
  const EncodedPairs s1_sup = encode_pairs(split.s1_support, corpus, *encoder);
  const EncodedPairs s1_train = encode_pairs(split.s1_train, corpus, *encoder);
  const SupportSet s1_support{s1_sup.X, s1_sup.Y};

  const Index n1 = s1_train.X.rows();
  if (n1 < 2)
    throw std::runtime_error("one-shot: side-1 training set too small");
  std::vector<Index> order(static_cast<std::size_t>(n1));
  std::iota(order.begin(), order.end(), 0);
  const std::uint64_t train_seed = cfg.train_seed.value_or(cfg.seed);
  std::mt19937_64 rng(train_seed);
  std::shuffle(order.begin(), order.end(), rng);
  Index n_val = static_cast<Index>(
      std::lround(cfg.oneshot_val_fraction * static_cast<double>(n1)));
  n_val = std::clamp<Index>(n_val, 1, n1 - 1);

  EncodedDataset train_ds, val_ds;
  train_ds.X.resize(n1 - n_val, encoder->dim());
  train_ds.Y.resize(n1 - n_val, corpus.vocab.size());
  val_ds.X.resize(n_val, encoder->dim());
  val_ds.Y.resize(n_val, corpus.vocab.size());
  for (Index i = 0; i < n1; ++i) {
    const Index src = order[static_cast<std::size_t>(i)];
    if (i < n_val) {
      val_ds.X.row(i) = s1_train.X.row(src);
      val_ds.Y.row(i) = s1_train.Y.row(src);
      val_ds.sample_indices.push_back(static_cast<int>(src));
    } else {
      train_ds.X.row(i - n_val) = s1_train.X.row(src);
      train_ds.Y.row(i - n_val) = s1_train.Y.row(src);
      train_ds.sample_indices.push_back(static_cast<int>(src));
    }
  }

  auto model =
      build_trainable(cfg, encoder->dim(), corpus.vocab.size(), train_seed);
  TrainConfig tc = cfg.train;
  tc.seed = train_seed;
  const TrainResult result = train(*model, train_ds, val_ds, tc, &s1_support);
  write_file_atomic(out / "history.csv", history_to_csv(result.histories));
  save_model_checkpoint(*model, out / "checkpoint.bin");

  // side-2 evaluation: support bank swaps to S2_support, ranking restricted
  // to the labels present there
  const EncodedPairs s2_sup = encode_pairs(split.s2_support, corpus, *encoder);
  const SupportSet s2_support{s2_sup.X, s2_sup.Y};
  std::set<int> support_labels;
  for (const auto& p : split.s2_support)
    support_labels.insert(corpus.vocab.index(p.app));

  const auto restrict_rank = [&](const std::vector<int>& ranked) {
    std::vector<std::string> apps;
    for (int idx : ranked) {
      if (!support_labels.count(idx)) continue;
      apps.push_back(corpus.vocab.id(idx));
      if (static_cast<int>(apps.size()) == cfg.n_max) break;
    }
    return apps;
  };

  const auto model_ranker = [&](const OneShotPair& pair) {
    const Vector q = encoder->encode(pair.text).values;
    return restrict_rank(model->rank(s2_support, q));
  };

  AppProfileIndex nn_index;
  nn_index.dim = encoder->dim();
  nn_index.profiles.resize(static_cast<std::size_t>(corpus.vocab.size()));
  for (const auto& p : split.s2_support)
    nn_add_example(nn_index, *encoder, p.text, {corpus.vocab.index(p.app)});
  const auto nn_ranker = [&](const OneShotPair& pair) {
    const Vector q = encoder->encode(pair.text).values;
    std::vector<int> ranked;
    for (const auto& [app, score] :
         nn_predict(nn_index, q, corpus.vocab.size(), cfg.nn))
      ranked.push_back(app);
    return restrict_rank(ranked);
  };

  const auto nn_acc = one_shot_evaluate(nn_ranker, split, cfg.n_max);
  const auto model_acc = one_shot_evaluate(model_ranker, split, cfg.n_max);

  const std::string kind = model_kind_name(cfg.model);
  write_file_atomic(out / "report.csv",
                    oneshot_csv(cfg.n_max, "nn", nn_acc, kind, model_acc));
  const std::string text =
      oneshot_text(split, violations, cfg.n_max, "nn", nn_acc, kind, model_acc);
  write_file_atomic(out / "report.txt", text);
  std::cout << text;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"few-shot intent-to-app classification experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed_override = 0;
  struct SubSpec {
    const char* name;
    const char* desc;
    void (*fn)(const ExperimentConfig&, const std::string&);
  };
  const SubSpec specs[] = {
      {"gen-data", "generate a synthetic corpus and its statistics",
       cmd_gen_data},
      {"stats", "corpus statistics", cmd_stats},
      {"run", "train (when applicable) and evaluate one model", cmd_run},
      {"oneshot", "1-shot unseen-label experiment (nn + matchnet)",
       cmd_oneshot},
  };
  CLI::Option* seed_opts[4];
  CLI::App* subs[4];
  for (int i = 0; i < 4; ++i) {
    subs[i] = app.add_subcommand(specs[i].name, specs[i].desc);
    subs[i]->add_option("--config", config_path, "experiment config file")
        ->required();
    subs[i]->add_option("--out", out_dir, "output directory")->required();
    seed_opts[i] =
        subs[i]->add_option("--seed", seed_override, "override the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    for (int i = 0; i < 4; ++i) {
      if (!subs[i]->parsed()) continue;
      if (seed_opts[i]->count() > 0) {
        cfg.seed = seed_override;
        cfg.synth_seed.reset();
        cfg.split_seed.reset();
        cfg.train_seed.reset();
      }
      validate_config(cfg);
      std::filesystem::create_directories(out_dir);
      specs[i].fn(cfg, out_dir);
      return 0;
    }
    return 2;  // unreachable with require_subcommand(1)
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace intentrec
