#include "intentrec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "intentrec/eval.hpp"

namespace intentrec {

EncodedDataset encode_dataset(const Corpus& corpus,
                              const std::vector<int>& indices,
                              const SentenceEncoder& encoder) {
  EncodedDataset ds;
  ds.sample_indices = indices;
  ds.X.resize(static_cast<Index>(indices.size()), encoder.dim());
  ds.Y.resize(static_cast<Index>(indices.size()), corpus.vocab.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Sample& s = corpus.samples.at(static_cast<std::size_t>(indices[i]));
    ds.X.row(static_cast<Index>(i)) =
        encoder.encode(corpus.utterance_of(s).text).values.transpose();
    ds.Y.row(static_cast<Index>(i)) = corpus.multi_hot(s).transpose();
  }
  return ds;
}

std::vector<int> rank_descending(const Eigen::Ref<const Vector>& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  return order;
}

namespace {

class MemNetModel final : public TrainableModel {
 public:
  MemNetModel(const MemNetConfig& config, std::uint64_t seed)
      : config_(config), params_(memnet_init(config, seed)) {}

  ParamRefs param_refs() override {
    return memnet_param_refs(params_, config_);
  }
  void reinit(std::uint64_t seed) override {
    params_ = memnet_init(config_, seed);
  }
  double episode_grads(const Episode& episode, GradSet& grads) override {
    return memnet_grads(params_, config_, episode.support.X, episode.queries,
                        episode.targets, grads);
  }
  std::vector<int> rank(const SupportSet& support,
                        const Eigen::Ref<const Vector>& query) const override {
    return rank_descending(
        memnet_forward(params_, config_, support.X, query).scores);
  }

 private:
  MemNetConfig config_;
  MemNetParams params_;
};

class MatchNetModel final : public TrainableModel {
 public:
  MatchNetModel(const MatchNetConfig& config, std::uint64_t seed)
      : config_(config), params_(matchnet_init(config, seed)) {}

  ParamRefs param_refs() override {
    return matchnet_param_refs(params_, config_);
  }
  void reinit(std::uint64_t seed) override {
    params_ = matchnet_init(config_, seed);
  }
  double episode_grads(const Episode& episode, GradSet& grads) override {
    return matchnet_grads(params_, config_, episode, grads);
  }
  std::vector<int> rank(const SupportSet& support,
                        const Eigen::Ref<const Vector>& query) const override {
    return rank_descending(
        hybrid_forward(params_, config_, support, query).y_hat);
  }

 private:
  MatchNetConfig config_;
  MatchNetParams params_;
};

class FfnnTrainable final : public TrainableModel {
 public:
  FfnnTrainable(Index in_dim, Index vocab, std::vector<Index> hidden,
                FfnnOutputMode mode, std::uint64_t seed)
      : in_dim_(in_dim),
        vocab_(vocab),
        hidden_(std::move(hidden)),
        mode_(mode),
        model_(make_ffnn(in_dim, vocab, hidden_, mode, seed)) {}

  ParamRefs param_refs() override { return ffnn_param_refs(model_); }
  void reinit(std::uint64_t seed) override {
    model_ = make_ffnn(in_dim_, vocab_, hidden_, mode_, seed);
  }
  double episode_grads(const Episode& episode, GradSet& grads) override {
    return ffnn_grads(model_, episode.queries, episode.targets, grads);
  }
  std::vector<int> rank(const SupportSet&,
                        const Eigen::Ref<const Vector>& query) const override {
    return rank_descending(ffnn_forward(model_, query));
  }

 private:
  Index in_dim_;
  Index vocab_;
  std::vector<Index> hidden_;
  FfnnOutputMode mode_;
  FfnnModel model_;
};

Episode make_episode(const EncodedDataset& train_set, int batch_size,
                     std::mt19937_64& rng, const SupportSet* fixed_support) {
  const int n = static_cast<int>(train_set.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<int> batch(order.begin(), order.begin() + batch_size);
  std::vector<int> rest(order.begin() + batch_size, order.end());
  std::sort(batch.begin(), batch.end());
  std::sort(rest.begin(), rest.end());

  Episode ep;
  ep.queries.resize(batch_size, train_set.X.cols());
  ep.targets.resize(batch_size, train_set.Y.cols());
  for (int i = 0; i < batch_size; ++i) {
    ep.queries.row(i) = train_set.X.row(batch[static_cast<std::size_t>(i)]);
    ep.targets.row(i) = train_set.Y.row(batch[static_cast<std::size_t>(i)]);
    ep.query_indices.push_back(
        train_set.sample_indices[static_cast<std::size_t>(
            batch[static_cast<std::size_t>(i)])]);
  }
  if (fixed_support) {
    ep.support = *fixed_support;
  } else {
    ep.support.X.resize(static_cast<Index>(rest.size()), train_set.X.cols());
    ep.support.Y.resize(static_cast<Index>(rest.size()), train_set.Y.cols());
    for (std::size_t i = 0; i < rest.size(); ++i) {
      ep.support.X.row(static_cast<Index>(i)) =
          train_set.X.row(rest[i]);
      ep.support.Y.row(static_cast<Index>(i)) =
          train_set.Y.row(rest[i]);
      ep.support_indices.push_back(
          train_set.sample_indices[static_cast<std::size_t>(rest[i])]);
    }
  }
  return ep;
}

double monitor_value(TrainableModel& model, const SupportSet& support,
                     const EncodedDataset& val, MonitorMetric monitor,
                     GradSet& scratch) {
  if (monitor == MonitorMetric::ValidationLoss) {
    Episode ep;
    ep.support = support;
    ep.queries = val.X;
    ep.targets = val.Y;
    scratch.set_zero();
    return model.episode_grads(ep, scratch);
  }
  const int n = monitor == MonitorMetric::Top1Purity ? 1 : 3;
  double sum = 0.0;
  for (Index i = 0; i < val.size(); ++i) {
    auto ranked = model.rank(support, val.X.row(i).transpose());
    ranked.resize(static_cast<std::size_t>(
        std::min<Index>(n, static_cast<Index>(ranked.size()))));
    std::set<int> actual;
    for (Index j = 0; j < val.Y.cols(); ++j)
      if (val.Y(i, j) > 0.5) actual.insert(static_cast<int>(j));
    sum += purity_coverage(ranked, actual).purity;
  }
  return sum * 100.0 / static_cast<double>(val.size());
}

}  // namespace

std::unique_ptr<TrainableModel> make_memnet_model(const MemNetConfig& config,
                                                  std::uint64_t seed) {
  return std::make_unique<MemNetModel>(config, seed);
}

std::unique_ptr<TrainableModel> make_matchnet_model(const MatchNetConfig& config,
                                                    std::uint64_t seed) {
  return std::make_unique<MatchNetModel>(config, seed);
}

std::unique_ptr<TrainableModel> make_ffnn_trainable(
    Index in_dim, Index vocab, const std::vector<Index>& hidden,
    FfnnOutputMode mode, std::uint64_t seed) {
  return std::make_unique<FfnnTrainable>(in_dim, vocab, hidden, mode, seed);
}

Episode sample_episode(const EncodedDataset& train_set, int batch_size,
                       std::mt19937_64& rng) {
  if (batch_size < 1)
    throw std::invalid_argument("sample_episode: batch_size must be >= 1");
  if (static_cast<Index>(batch_size) >= train_set.size())
    throw std::invalid_argument(
        "sample_episode: training set too small for an out-of-batch support "
        "set");
  return make_episode(train_set, batch_size, rng, nullptr);
}

TrainResult train(TrainableModel& model, const EncodedDataset& train_set,
                  const EncodedDataset& val_set, const TrainConfig& config,
                  const SupportSet* fixed_support) {
  if (config.batch_size < 1)
    throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.patience < 1)
    throw std::invalid_argument("train: patience must be >= 1");
  if (config.n_restarts < 1)
    throw std::invalid_argument("train: n_restarts must be >= 1");
  if (config.max_epochs < 1)
    throw std::invalid_argument("train: max_epochs must be >= 1");
  if (!(config.learning_rate > 0.0))
    throw std::invalid_argument("train: learning_rate must be > 0");
  if (train_set.size() < 1 || val_set.size() < 1)
    throw std::invalid_argument("train: empty train or validation set");

  int batch_size = config.batch_size;
  if (fixed_support)
    batch_size = static_cast<int>(
        std::min<Index>(batch_size, train_set.size()));
  else if (static_cast<Index>(batch_size) >= train_set.size())
    throw std::invalid_argument(
        "train: batch_size must be smaller than the training set");

  const int episodes_per_epoch = static_cast<int>(
      (train_set.size() + batch_size - 1) / batch_size);
  const bool maximize = config.monitor != MonitorMetric::ValidationLoss;

  // evaluation-time support: the whole training partition (or the fixed bank)
  SupportSet eval_support;
  if (fixed_support) {
    eval_support = *fixed_support;
  } else {
    eval_support.X = train_set.X;
    eval_support.Y = train_set.Y;
  }

  TrainResult result;
  double best_overall = 0.0;

  for (int r = 0; r < config.n_restarts; ++r) {
    const std::uint64_t restart_seed = config.seed + static_cast<std::uint64_t>(r);
    model.reinit(restart_seed);
    ParamRefs refs = model.param_refs();
    GradSet grads = GradSet::zeros_like(refs);
    GradSet scratch = GradSet::zeros_like(refs);
    AdamState adam = AdamState::init(refs, {config.learning_rate});
    std::mt19937_64 rng(restart_seed);

    RunHistory history;
    history.restart = r;
    history.restart_seed = restart_seed;
    double best_val =
        maximize ? -std::numeric_limits<double>::infinity()
                 : std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::string, Matrix>> best_snapshot;
    int epochs_since_improvement = 0;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
      double loss_sum = 0.0;
      bool blew_up = false;
      for (int e = 0; e < episodes_per_epoch; ++e) {
        Episode ep = make_episode(train_set, batch_size, rng, fixed_support);
        grads.set_zero();
        const double loss = model.episode_grads(ep, grads);
        if (!std::isfinite(loss) || !grads.all_finite()) {
          blew_up = true;
          break;
        }
        loss_sum += loss;
        adam_step(refs, grads, adam);
      }
      if (blew_up) {
        history.diverged = true;
        break;
      }
      const double train_loss = loss_sum / episodes_per_epoch;
      const double val_metric =
          monitor_value(model, eval_support, val_set, config.monitor, scratch);
      if (!std::isfinite(val_metric)) {
        history.diverged = true;
        break;
      }
      history.epochs.push_back({train_loss, val_metric});

      const bool improved = maximize ? val_metric > best_val
                                     : val_metric < best_val;
      if (improved) {
        best_val = val_metric;
        history.best_epoch = epoch;
        best_snapshot = snapshot_params(refs);
        epochs_since_improvement = 0;
      } else if (++epochs_since_improvement >= config.patience) {
        break;
      }
    }

    history.best_value = history.best_epoch > 0 ? best_val : 0.0;
    result.histories.push_back(history);
    if (history.diverged || history.best_epoch == 0) continue;

    const bool wins =
        result.best_restart < 0 ||
        (maximize ? best_val > best_overall : best_val < best_overall);
    if (wins) {
      best_overall = best_val;
      result.best_restart = r;
      result.best_params = std::move(best_snapshot);
    }
  }

  if (result.best_restart < 0)
    throw std::runtime_error("train: every restart diverged");

  ParamRefs refs = model.param_refs();
  restore_params(refs, result.best_params);
  return result;
}

std::string history_to_csv(const std::vector<RunHistory>& histories) {
  std::string out = "restart,epoch,train_loss,val_metric\n";
  char buf[96];
  for (const auto& h : histories)
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%d,%zu,%.10g,%.10g\n", h.restart, i + 1,
                    h.epochs[i].train_loss, h.epochs[i].val_metric);
      out += buf;
    }
  return out;
}

}  // namespace intentrec
