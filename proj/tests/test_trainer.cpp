#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "intentrec/cli.hpp"
#include "intentrec/corpus.hpp"
#include "intentrec/embedding.hpp"
#include "intentrec/trainer.hpp"

using namespace intentrec;

namespace {

struct SmallTask {
  Corpus corpus;
  EncodedDataset train;
  EncodedDataset val;
};

SmallTask small_task() {
  SynthConfig cfg;
  cfg.n_apps = 4;
  cfg.n_samples = 60;
  cfg.labels_per_sample = {{1, 0.7}, {2, 0.3}};
  SmallTask task;
  task.corpus = generate_synthetic(cfg, 5);
  const CorpusSplit split = split_corpus(task.corpus, 0.60, 0.15, 0.25, 5);
  const HashedRandomEncoder enc(16, 2);
  task.train = encode_dataset(task.corpus, split.train, enc);
  task.val = encode_dataset(task.corpus, split.validation, enc);
  return task;
}

}  // namespace

TEST_CASE("encode_dataset rows mirror the encoder and the labels") {
  const SmallTask task = small_task();
  const HashedRandomEncoder enc(16, 2);
  CHECK(task.train.X.cols() == 16);
  CHECK(task.train.Y.cols() == 4);
  REQUIRE(task.train.size() ==
          static_cast<Index>(task.train.sample_indices.size()));

  for (Index r = 0; r < task.train.size(); ++r) {
    const int si = task.train.sample_indices[static_cast<std::size_t>(r)];
    const Sample& s = task.corpus.samples[static_cast<std::size_t>(si)];
    const Vector expect =
        enc.encode(task.corpus.utterance_of(s).text).values;
    CHECK((task.train.X.row(r).transpose() - expect).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((task.train.Y.row(r).transpose() - task.corpus.multi_hot(s))
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("episodes split train rows into disjoint batch and support") {
  const SmallTask task = small_task();
  std::mt19937_64 rng(1);
  const int batch = 8;
  const Episode ep = sample_episode(task.train, batch, rng);

  CHECK(ep.queries.rows() == batch);
  CHECK(ep.support.X.rows() == task.train.size() - batch);
  CHECK(ep.support.Y.rows() == ep.support.X.rows());

  std::set<int> batch_ids(ep.query_indices.begin(), ep.query_indices.end());
  std::set<int> support_ids(ep.support_indices.begin(),
                            ep.support_indices.end());
  CHECK(batch_ids.size() == ep.query_indices.size());
  for (int id : batch_ids) CHECK(support_ids.count(id) == 0);

  std::set<int> all = batch_ids;
  all.insert(support_ids.begin(), support_ids.end());
  std::set<int> train_ids(task.train.sample_indices.begin(),
                          task.train.sample_indices.end());
  CHECK(all == train_ids);

  CHECK_THROWS(sample_episode(task.train, 0, rng));
  CHECK_THROWS(sample_episode(task.train,
                              static_cast<int>(task.train.size()), rng));
}

TEST_CASE("episode rows carry the right vectors for their indices") {
  const SmallTask task = small_task();
  std::mt19937_64 rng(2);
  const Episode ep = sample_episode(task.train, 5, rng);
  for (Index r = 0; r < ep.queries.rows(); ++r) {
    const int si = ep.query_indices[static_cast<std::size_t>(r)];
    const auto it = std::find(task.train.sample_indices.begin(),
                              task.train.sample_indices.end(), si);
    REQUIRE(it != task.train.sample_indices.end());
    const Index row = it - task.train.sample_indices.begin();
    CHECK((ep.queries.row(r) - task.train.X.row(row)).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((ep.targets.row(r) - task.train.Y.row(row)).lpNorm<Eigen::Infinity>() ==
          0.0);
  }
}

TEST_CASE("rank_descending orders scores with index ties") {
  Vector scores(5);
  scores << 0.3, 0.9, 0.3, 0.1, 0.9;
  const std::vector<int> ranked = rank_descending(scores);
  CHECK(ranked == std::vector<int>{1, 4, 0, 2, 3});
}

TEST_CASE("training improves a small matchnet and stops early") {
  const SmallTask task = small_task();
  MatchNetConfig mc;
  mc.dim = 16;
  mc.hidden = 24;
  mc.vocab = 4;
  mc.share_fg = true;
  auto model = make_matchnet_model(mc, 0);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.learning_rate = 0.01;
  tc.max_epochs = 40;
  tc.patience = 6;
  tc.n_restarts = 2;
  tc.seed = 3;
  tc.monitor = MonitorMetric::Top1Purity;

  const TrainResult result = train(*model, task.train, task.val, tc);
  REQUIRE(result.histories.size() == 2);
  CHECK(result.best_restart >= 0);

  double best_overall = -1.0;
  for (const auto& h : result.histories) {
    CHECK(h.restart_seed == tc.seed + static_cast<std::uint64_t>(h.restart));
    REQUIRE(!h.epochs.empty());
    CHECK(h.best_epoch >= 1);
    CHECK(h.best_epoch <= static_cast<int>(h.epochs.size()));
    // early stopping: no more than `patience` epochs beyond the best one
    CHECK(static_cast<int>(h.epochs.size()) <= h.best_epoch + tc.patience);
    // best_value matches the recorded epoch metric
    CHECK(h.best_value ==
          h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].val_metric);
    best_overall = std::max(best_overall, h.best_value);
  }
  // the winner is the best restart, and it learned something non-trivial
  CHECK(result.histories[static_cast<std::size_t>(result.best_restart)]
            .best_value == best_overall);
  CHECK(best_overall > 50.0);  // separable 4-app task, well above chance
}

TEST_CASE("training is deterministic given the config") {
  const SmallTask task = small_task();
  MatchNetConfig mc;
  mc.dim = 16;
  mc.hidden = 16;
  mc.vocab = 4;
  auto model_a = make_matchnet_model(mc, 0);
  auto model_b = make_matchnet_model(mc, 0);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.learning_rate = 0.01;
  tc.max_epochs = 10;
  tc.patience = 5;
  tc.n_restarts = 2;
  tc.seed = 7;

  const TrainResult a = train(*model_a, task.train, task.val, tc);
  const TrainResult b = train(*model_b, task.train, task.val, tc);
  CHECK(history_to_csv(a.histories) == history_to_csv(b.histories));
  REQUIRE(a.best_params.size() == b.best_params.size());
  for (std::size_t i = 0; i < a.best_params.size(); ++i) {
    CHECK(a.best_params[i].first == b.best_params[i].first);
    CHECK((a.best_params[i].second - b.best_params[i].second)
              .lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("validation-loss monitoring minimizes instead of maximizing") {
  const SmallTask task = small_task();
  MatchNetConfig mc;
  mc.dim = 16;
  mc.hidden = 16;
  mc.vocab = 4;
  auto model = make_matchnet_model(mc, 0);

  TrainConfig tc;
  tc.batch_size = 8;
  tc.learning_rate = 0.01;
  tc.max_epochs = 15;
  tc.patience = 4;
  tc.n_restarts = 1;
  tc.seed = 1;
  tc.monitor = MonitorMetric::ValidationLoss;

  const TrainResult result = train(*model, task.train, task.val, tc);
  const RunHistory& h = result.histories[0];
  double min_val = h.epochs[0].val_metric;
  for (const auto& e : h.epochs) min_val = std::min(min_val, e.val_metric);
  CHECK(h.best_value == min_val);
}

TEST_CASE("a fixed support bank clamps the batch instead of throwing") {
  const SmallTask task = small_task();
  MatchNetConfig mc;
  mc.dim = 16;
  mc.hidden = 16;
  mc.vocab = 4;
  auto model = make_matchnet_model(mc, 0);

  SupportSet bank;
  bank.X = task.val.X;
  bank.Y = task.val.Y;

  TrainConfig tc;
  tc.batch_size = 1000;  // far larger than the training set
  tc.learning_rate = 0.01;
  tc.max_epochs = 3;
  tc.patience = 2;
  tc.n_restarts = 1;

  const TrainResult result = train(*model, task.train, task.val, tc, &bank);
  CHECK(result.best_restart == 0);
}

TEST_CASE("trainable wrappers reinitialize deterministically") {
  MemNetConfig mc;
  mc.dim = 8;
  mc.vocab = 4;
  auto model = make_memnet_model(mc, 1);
  model->reinit(5);
  const auto snap_a = snapshot_params(model->param_refs());
  model->reinit(6);
  model->reinit(5);
  const auto snap_b = snapshot_params(model->param_refs());
  REQUIRE(snap_a.size() == snap_b.size());
  for (std::size_t i = 0; i < snap_a.size(); ++i)
    CHECK((snap_a[i].second - snap_b[i].second).lpNorm<Eigen::Infinity>() ==
          0.0);
}

TEST_CASE("history csv carries one row per epoch") {
  RunHistory h;
  h.restart = 1;
  h.restart_seed = 8;
  h.epochs = {{0.5, 10.0}, {0.25, 20.0}};
  h.best_epoch = 2;
  h.best_value = 20.0;
  const std::string csv = history_to_csv({h});
  CHECK(csv.rfind("restart,epoch,train_loss,val_metric\n", 0) == 0);
  CHECK(csv.find("1,1,") != std::string::npos);
  CHECK(csv.find("1,2,") != std::string::npos);
}
