#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "intentrec/corpus.hpp"
#include "intentrec/embedding.hpp"
#include "intentrec/numerics.hpp"
#include "intentrec/params.hpp"
#include "intentrec/types.hpp"

namespace intentrec {

struct MajorityModel {
  // every vocab app exactly once, by descending training frequency,
  // ties by ascending app id
  std::vector<int> ranked;
};

MajorityModel majority_rank(const Corpus& corpus,
                            const std::vector<int>& train_indices);

// Semi-perfect bound: the actual labels that occurred in training (in
// majority-rank order), padded from the majority list up to n.
std::vector<int> oracle_predict(const std::set<int>& actual_labels,
                                const std::set<int>& train_label_set,
                                const MajorityModel& majority, int n);

// Per-app profile: the sentence vectors of every training sample that
// includes the app.
struct AppProfileIndex {
  Index dim = 0;
  std::vector<std::vector<Vector>> profiles;  // indexed by app
};

enum class NnDistance { Euclidean, Cosine };
enum class NnReduce { Min, Mean };

// Empirically best combination on the original data; alternatives kept as
// configuration.
struct NnScoring {
  NnDistance distance = NnDistance::Euclidean;
  NnReduce reduce = NnReduce::Min;
};

AppProfileIndex nn_index_build(const SentenceEncoder& encoder,
                               const Corpus& corpus,
                               const std::vector<int>& train_indices);

// score(app) = 1 / (profile distance + 1e-8); apps without a profile score 0.
// Returns the top n of (app, score) ranked by descending score, ties by
// ascending app index.
std::vector<std::pair<int, double>> nn_predict(const AppProfileIndex& index,
                                               const Eigen::Ref<const Vector>& query,
                                               int n, NnScoring scoring = {});

void nn_add_example(AppProfileIndex& index, const SentenceEncoder& encoder,
                    const std::string& text, const std::vector<int>& labels);

enum class FfnnOutputMode { SigmoidSse, SoftmaxCe };

struct FfnnModel {
  std::vector<DenseLayer> layers;  // hidden layers sigmoid, final per mode
  FfnnOutputMode mode = FfnnOutputMode::SigmoidSse;

  Index in_dim() const { return layers.front().in_dim(); }
  Index out_dim() const { return layers.back().out_dim(); }
};

FfnnModel make_ffnn(Index in_dim, Index vocab_size,
                    const std::vector<Index>& hidden, FfnnOutputMode mode,
                    std::uint64_t seed);

ParamRefs ffnn_param_refs(FfnnModel& model);

// Per-app scores: independent (0,1) sigmoids or a softmax distribution.
Vector ffnn_forward(const FfnnModel& model, const Eigen::Ref<const Vector>& query);

// All apps scoring strictly above the threshold. Sigmoid mode only.
std::set<int> ffnn_threshold_predict(const FfnnModel& model,
                                     const Eigen::Ref<const Vector>& query,
                                     double threshold);

// Mean loss over the batch; accumulates analytic gradients for every layer.
// SigmoidSse uses raw multi-hot targets, SoftmaxCe normalizes them.
double ffnn_grads(const FfnnModel& model, const Matrix& queries,
                  const Matrix& targets, GradSet& grads);

}  // namespace intentrec
