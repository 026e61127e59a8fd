#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "intentrec/baselines.hpp"
#include "intentrec/corpus.hpp"
#include "intentrec/embedding.hpp"
#include "intentrec/matchnet.hpp"
#include "intentrec/memnet.hpp"
#include "intentrec/params.hpp"

namespace intentrec {

// A corpus subset run through a sentence encoder, one row per sample.
struct EncodedDataset {
  Matrix X;  // n x d
  Matrix Y;  // n x vocab, multi-hot
  std::vector<int> sample_indices;  // provenance into corpus.samples

  Index size() const { return X.rows(); }
};

EncodedDataset encode_dataset(const Corpus& corpus,
                              const std::vector<int>& indices,
                              const SentenceEncoder& encoder);

enum class MonitorMetric { Top1Purity, Top3Purity, ValidationLoss };

struct TrainConfig {
  int batch_size = 32;
  double learning_rate = 0.001;
  int max_epochs = 100;
  int patience = 10;
  int n_restarts = 5;
  std::uint64_t seed = 0;
  MonitorMetric monitor = MonitorMetric::Top3Purity;
};

struct EpochRecord {
  double train_loss = 0.0;  // mean episode loss
  double val_metric = 0.0;
};

struct RunHistory {
  int restart = 0;
  std::uint64_t restart_seed = 0;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 when the restart diverged immediately
  double best_value = 0.0;
  bool diverged = false;
};

// Common face of every gradient-trained architecture. `rank` returns the
// whole vocabulary ordered by descending score (ties by ascending index);
// models that ignore the support bank (ffnn) simply don't read it.
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual ParamRefs param_refs() = 0;
  virtual void reinit(std::uint64_t seed) = 0;
  virtual double episode_grads(const Episode& episode, GradSet& grads) = 0;
  virtual std::vector<int> rank(const SupportSet& support,
                                const Eigen::Ref<const Vector>& query) const = 0;
};

std::unique_ptr<TrainableModel> make_memnet_model(const MemNetConfig& config,
                                                  std::uint64_t seed);
std::unique_ptr<TrainableModel> make_matchnet_model(const MatchNetConfig& config,
                                                    std::uint64_t seed);
std::unique_ptr<TrainableModel> make_ffnn_trainable(
    Index in_dim, Index vocab, const std::vector<Index>& hidden,
    FfnnOutputMode mode, std::uint64_t seed);

// Batch drawn uniformly without replacement; the support set is everything
// else in the training set, so the two are disjoint by construction.
// Requires batch_size < |train_set|.
Episode sample_episode(const EncodedDataset& train_set, int batch_size,
                       std::mt19937_64& rng);

struct TrainResult {
  std::vector<std::pair<std::string, Matrix>> best_params;
  std::vector<RunHistory> histories;
  int best_restart = -1;
};

// Runs n_restarts independent trainings seeded config.seed + r, each with
// early stopping on the validation monitor; the model is left holding (and
// best_params holds) the weights of the best restart, ties to the lowest
// index. Divergent restarts are recorded in their history and skipped.
// With `fixed_support` episodes keep that support bank instead of T-B (the
// one-shot training regime) and batch_size is clamped to |train_set|.
TrainResult train(TrainableModel& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config,
                  const SupportSet* fixed_support = nullptr);

// CSV: restart,epoch,train_loss,val_metric
std::string history_to_csv(const std::vector<RunHistory>& histories);

std::vector<int> rank_descending(const Eigen::Ref<const Vector>& scores);

}  // namespace intentrec
