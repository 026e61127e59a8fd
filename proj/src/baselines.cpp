#include "intentrec/baselines.hpp"

#include <algorithm>
#include <stdexcept>

namespace intentrec {

MajorityModel majority_rank(const Corpus& corpus,
                            const std::vector<int>& train_indices) {
  if (train_indices.empty())
    throw std::invalid_argument("majority_rank: empty training set");
  std::vector<std::size_t> freq(static_cast<std::size_t>(corpus.vocab.size()),
                                0);
  for (int si : train_indices)
    for (int a : corpus.label_indices(corpus.samples[static_cast<std::size_t>(si)]))
      freq[static_cast<std::size_t>(a)] += 1;

  MajorityModel model;
  model.ranked.resize(freq.size());
  for (std::size_t i = 0; i < freq.size(); ++i)
    model.ranked[i] = static_cast<int>(i);
  std::stable_sort(model.ranked.begin(), model.ranked.end(),
                   [&](int a, int b) {
                     return freq[static_cast<std::size_t>(a)] >
                            freq[static_cast<std::size_t>(b)];
                   });
  return model;
}

std::vector<int> oracle_predict(const std::set<int>& actual_labels,
                                const std::set<int>& train_label_set,
                                const MajorityModel& majority, int n) {
  if (n < 1) throw std::invalid_argument("oracle_predict: n must be >= 1");
  std::vector<int> out;
  for (int a : majority.ranked) {
    if (actual_labels.count(a) && train_label_set.count(a)) out.push_back(a);
    if (static_cast<int>(out.size()) == n) return out;
  }
  for (int a : majority.ranked) {
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
    if (static_cast<int>(out.size()) == n) break;
  }
  return out;
}

AppProfileIndex nn_index_build(const SentenceEncoder& encoder,
                               const Corpus& corpus,
                               const std::vector<int>& train_indices) {
  AppProfileIndex index;
  index.dim = encoder.dim();
  index.profiles.resize(static_cast<std::size_t>(corpus.vocab.size()));
  for (int si : train_indices) {
    const auto& s = corpus.samples[static_cast<std::size_t>(si)];
    const Vector v = encoder.encode(corpus.utterance_of(s).text).values;
    for (int a : corpus.label_indices(s))
      index.profiles[static_cast<std::size_t>(a)].push_back(v);
  }
  return index;
}

namespace {

double profile_distance(const std::vector<Vector>& profile,
                        const Eigen::Ref<const Vector>& query,
                        NnScoring scoring) {
  double acc = scoring.reduce == NnReduce::Min
                   ? std::numeric_limits<double>::infinity()
                   : 0.0;
  for (const Vector& v : profile) {
    double d;
    if (scoring.distance == NnDistance::Euclidean) {
      d = (v - query).norm();
    } else {
      d = 1.0 - cosine_similarity(v, query);
    }
    if (scoring.reduce == NnReduce::Min)
      acc = std::min(acc, d);
    else
      acc += d;
  }
  if (scoring.reduce == NnReduce::Mean)
    acc /= static_cast<double>(profile.size());
  return acc;
}

}  // namespace

std::vector<std::pair<int, double>> nn_predict(
    const AppProfileIndex& index, const Eigen::Ref<const Vector>& query, int n,
    NnScoring scoring) {
  if (query.size() != index.dim)
    throw std::invalid_argument("nn_predict: query dimension mismatch");
  if (n < 1) throw std::invalid_argument("nn_predict: n must be >= 1");

  const auto apps = static_cast<int>(index.profiles.size());
  std::vector<std::pair<int, double>> scored(static_cast<std::size_t>(apps));
  for (int a = 0; a < apps; ++a) {
    const auto& profile = index.profiles[static_cast<std::size_t>(a)];
    double score = 0.0;
    if (!profile.empty())
      score = 1.0 / (profile_distance(profile, query, scoring) + 1e-8);
    scored[static_cast<std::size_t>(a)] = {a, score};
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& x, const auto& y) {
                     return x.second > y.second;
                   });
  if (static_cast<int>(scored.size()) > n) scored.resize(static_cast<std::size_t>(n));
  return scored;
}

void nn_add_example(AppProfileIndex& index, const SentenceEncoder& encoder,
                    const std::string& text, const std::vector<int>& labels) {
  if (labels.empty())
    throw std::invalid_argument("nn_add_example: labels must be non-empty");
  const Vector v = encoder.encode(text).values;
  for (int a : labels) {
    if (a < 0) throw std::invalid_argument("nn_add_example: negative label");
    if (static_cast<std::size_t>(a) >= index.profiles.size())
      index.profiles.resize(static_cast<std::size_t>(a) + 1);
    index.profiles[static_cast<std::size_t>(a)].push_back(v);
  }
}

FfnnModel make_ffnn(Index in_dim, Index vocab_size,
                    const std::vector<Index>& hidden, FfnnOutputMode mode,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FfnnModel model;
  model.mode = mode;
  Index prev = in_dim;
  for (Index width : hidden) {
    model.layers.push_back(
        make_dense_layer(width, prev, Activation::Sigmoid, rng));
    prev = width;
  }
  const Activation out_act = mode == FfnnOutputMode::SigmoidSse
                                 ? Activation::Sigmoid
                                 : Activation::Softmax;
  model.layers.push_back(make_dense_layer(vocab_size, prev, out_act, rng));
  return model;
}

ParamRefs ffnn_param_refs(FfnnModel& model) {
  ParamRefs refs;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    refs.push_back(param_view(prefix + ".W", model.layers[i].W));
    refs.push_back(param_view(prefix + ".b", model.layers[i].b));
  }
  return refs;
}

Vector ffnn_forward(const FfnnModel& model, const Eigen::Ref<const Vector>& query) {
  Vector x = query;
  for (const auto& layer : model.layers) x = layer.forward(x);
  return x;
}

std::set<int> ffnn_threshold_predict(const FfnnModel& model,
                                     const Eigen::Ref<const Vector>& query,
                                     double threshold) {
  if (model.mode != FfnnOutputMode::SigmoidSse)
    throw std::logic_error(
        "ffnn_threshold_predict: requires the sigmoid output mode");
  const Vector scores = ffnn_forward(model, query);
  std::set<int> out;
  for (Index i = 0; i < scores.size(); ++i)
    if (scores[i] > threshold) out.insert(static_cast<int>(i));
  return out;
}

double ffnn_grads(const FfnnModel& model, const Matrix& queries,
                  const Matrix& targets, GradSet& grads) {
  if (queries.rows() != targets.rows())
    throw std::invalid_argument("ffnn_grads: batch size mismatch");
  if (queries.cols() != model.in_dim() || targets.cols() != model.out_dim())
    throw std::invalid_argument("ffnn_grads: shape mismatch");

  const auto batch = queries.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const std::size_t n_layers = model.layers.size();
  double total_loss = 0.0;

  for (Index q = 0; q < batch; ++q) {
    // forward, caching activations
    std::vector<Vector> acts(n_layers + 1);
    acts[0] = queries.row(q);
    for (std::size_t l = 0; l < n_layers; ++l)
      acts[l + 1] = model.layers[l].forward(acts[l]);

    Vector target = targets.row(q);
    Vector delta;  // dL/d(pre-activation) of the output layer
    if (model.mode == FfnnOutputMode::SigmoidSse) {
      auto [loss, dpred] = sse_loss(acts[n_layers], target);
      total_loss += loss * inv_batch;
      delta = dpred.array() *
              activation_grad_from_output(Activation::Sigmoid, acts[n_layers])
                  .array();
    } else {
      const double tsum = target.sum();
      if (tsum <= 0)
        throw std::invalid_argument("ffnn_grads: target has no positive entry");
      target /= tsum;
      // recompute logits for the CE path
      Vector logits =
          model.layers[n_layers - 1].W * acts[n_layers - 1] +
          model.layers[n_layers - 1].b;
      auto [loss, dlogits] = softmax_cross_entropy(logits, target);
      total_loss += loss * inv_batch;
      delta = dlogits;
    }
    delta *= inv_batch;

    for (std::size_t l = n_layers; l-- > 0;) {
      const std::string prefix = "layer" + std::to_string(l);
      grads.mat(prefix + ".W").noalias() += delta * acts[l].transpose();
      grads.vec(prefix + ".b") += delta;
      if (l > 0) {
        Vector dx = model.layers[l].W.transpose() * delta;
        delta = dx.array() *
                activation_grad_from_output(model.layers[l - 1].act, acts[l])
                    .array();
      }
    }
  }
  return total_loss;
}

}  // namespace intentrec
