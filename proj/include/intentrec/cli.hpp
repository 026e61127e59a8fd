#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "intentrec/baselines.hpp"
#include "intentrec/corpus.hpp"
#include "intentrec/embedding.hpp"
#include "intentrec/trainer.hpp"

namespace intentrec {

// Raised for anything wrong with the configuration itself; mapped to exit
// code 2 (runtime failures exit 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CorpusSource { File, Synth };

enum class ModelKind { Majority, Oracle, Nn, Ffnn, MemNet, MatchNet, Hybrid };

struct ExperimentConfig {
  CorpusSource source = CorpusSource::Synth;
  std::string corpus_path;
  SynthConfig synth;

  // a readable word-vector file, or the "random:<dim>:<seed>" stub
  std::string embeddings = "random:128:5";

  ModelKind model = ModelKind::MatchNet;
  // memnet / hybrid
  int hops = 1;
  bool share_ab = false;
  bool nonlinear = true;
  int head_layers = 1;
  Index head_hidden = 100;
  // matchnet / hybrid
  bool share_fg = false;
  Index hidden = 300;
  // ffnn
  std::vector<Index> ffnn_hidden = {100};
  FfnnOutputMode ffnn_output = FfnnOutputMode::SigmoidSse;
  // nn
  NnScoring nn;

  double split_train = 0.60;
  double split_validation = 0.15;
  double split_test = 0.25;

  std::uint64_t seed = 0;  // experiment seed; --seed replaces it
  std::optional<std::uint64_t> synth_seed, split_seed, train_seed;

  TrainConfig train;
  int n_max = 10;

  int oneshot_min_hlis = 3;
  double oneshot_val_fraction = 0.15;
};

// Flat `key = value` lines; '#' starts a comment; unknown keys are errors.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& config);

// Parses "random:<dim>:<seed>" into a HashedRandomEncoder, anything else as
// a word-vector file path.
std::unique_ptr<SentenceEncoder> make_encoder(const std::string& spec);

void cmd_gen_data(const ExperimentConfig& config, const std::string& out_dir);
void cmd_stats(const ExperimentConfig& config, const std::string& out_dir);
void cmd_run(const ExperimentConfig& config, const std::string& out_dir);
void cmd_oneshot(const ExperimentConfig& config, const std::string& out_dir);

// Full front end: gen-data|stats|run|oneshot --config <path> --out <dir>
// [--seed N]. Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace intentrec
