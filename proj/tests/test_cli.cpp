#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "intentrec/cli.hpp"

using namespace intentrec;

namespace {

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("configs parse every documented key") {
  const ExperimentConfig cfg = parse_config_text(R"(
# experiment description
corpus.source = synth
corpus.synth.n_apps = 20
corpus.synth.n_samples = 500
corpus.synth.zipf_exponent = 0.8   # skewed
corpus.synth.keywords_per_app = 4
corpus.synth.label_noise = 0.25
corpus.synth.labels_per_sample = 1:0.5, 2:0.3, 3:0.2
corpus.synth.seed = 11
embeddings.path = random:64:9

model.kind = hybrid
model.hops = 2
model.share_ab = true
model.nonlinear = false
model.head_layers = 2
model.head_hidden = 50
model.share_fg = true
model.hidden = 128
model.hidden_layers = 80,40
model.output = softmax_ce
model.distance = cosine
model.reduce = mean

split.train = 0.7
split.validation = 0.1
split.test = 0.2
split.seed = 12
seed = 4

train.batch_size = 16
train.learning_rate = 0.005
train.max_epochs = 50
train.patience = 8
train.n_restarts = 3
train.monitor = top1_purity
train.seed = 13

eval.n_max = 5
oneshot.min_hlis = 4
oneshot.val_fraction = 0.2
)");

  CHECK(cfg.source == CorpusSource::Synth);
  CHECK(cfg.synth.n_apps == 20);
  CHECK(cfg.synth.n_samples == 500);
  CHECK(cfg.synth.zipf_exponent == 0.8);
  CHECK(cfg.synth.keywords_per_app == 4);
  CHECK(cfg.synth.label_noise == 0.25);
  REQUIRE(cfg.synth.labels_per_sample.size() == 3);
  CHECK(cfg.synth.labels_per_sample[1].first == 2);
  CHECK(cfg.synth.labels_per_sample[1].second == 0.3);
  CHECK(cfg.synth_seed == 11);
  CHECK(cfg.embeddings == "random:64:9");

  CHECK(cfg.model == ModelKind::Hybrid);
  CHECK(cfg.hops == 2);
  CHECK(cfg.share_ab);
  CHECK_FALSE(cfg.nonlinear);
  CHECK(cfg.head_layers == 2);
  CHECK(cfg.head_hidden == 50);
  CHECK(cfg.share_fg);
  CHECK(cfg.hidden == 128);
  CHECK(cfg.ffnn_hidden == std::vector<Index>{80, 40});
  CHECK(cfg.ffnn_output == FfnnOutputMode::SoftmaxCe);
  CHECK(cfg.nn.distance == NnDistance::Cosine);
  CHECK(cfg.nn.reduce == NnReduce::Mean);

  CHECK(cfg.split_train == 0.7);
  CHECK(cfg.split_validation == 0.1);
  CHECK(cfg.split_test == 0.2);
  CHECK(cfg.split_seed == 12);
  CHECK(cfg.seed == 4);

  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.learning_rate == 0.005);
  CHECK(cfg.train.max_epochs == 50);
  CHECK(cfg.train.patience == 8);
  CHECK(cfg.train.n_restarts == 3);
  CHECK(cfg.train.monitor == MonitorMetric::Top1Purity);
  CHECK(cfg.train_seed == 13);

  CHECK(cfg.n_max == 5);
  CHECK(cfg.oneshot_min_hlis == 4);
  CHECK(cfg.oneshot_val_fraction == 0.2);
}

TEST_CASE("defaults survive an empty config") {
  const ExperimentConfig cfg = parse_config_text("");
  CHECK(cfg.source == CorpusSource::Synth);
  CHECK(cfg.model == ModelKind::MatchNet);
  CHECK(cfg.embeddings == "random:128:5");
  CHECK(cfg.synth.n_apps == 12);
  CHECK(cfg.synth.n_samples == 200);
  CHECK(cfg.split_train == 0.60);
  CHECK(cfg.split_validation == 0.15);
  CHECK(cfg.split_test == 0.25);
  CHECK_FALSE(cfg.synth_seed.has_value());
  CHECK_FALSE(cfg.split_seed.has_value());
  CHECK_FALSE(cfg.train_seed.has_value());
  validate_config(cfg);  // the default experiment must be valid
}

TEST_CASE("config errors carry enough context") {
  CHECK_THROWS_AS(parse_config_text("no.such.key = 1"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("model.kind = perceptron"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.batch_size = many"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just some words"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("train.monitor = accuracy"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("corpus.synth.labels_per_sample = 1;0.4"),
                  ConfigError);

  try {
    parse_config_text("ok = 1");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("ok") != std::string::npos);
  }
}

TEST_CASE("validation rejects inconsistent experiments") {
  ExperimentConfig cfg = parse_config_text("split.train = 0.5");
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);  // ratios sum to 0.9

  cfg = parse_config_text("train.learning_rate = -0.5");
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);

  cfg = parse_config_text("oneshot.min_hlis = 1");
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);

  cfg = parse_config_text("corpus.source = file");
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);  // missing corpus.path

  cfg = parse_config_text("model.kind = memnet\nmodel.hops = 0");
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("the embeddings spec selects the encoder") {
  const auto random_enc = make_encoder("random:32:7");
  CHECK(random_enc->dim() == 32);
  CHECK(random_enc->encode("anything").oov_fraction == 0.0);

  const auto path = std::filesystem::temp_directory_path() / "cli_vecs.txt";
  {
    std::ofstream os(path);
    os << "mail 1.0 0.0\nsong 0.0 1.0\n";
  }
  const auto file_enc = make_encoder(path.string());
  CHECK(file_enc->dim() == 2);
  CHECK(file_enc->encode("mail").oov_fraction == 0.0);
  CHECK(file_enc->encode("unrelated").oov_fraction == 1.0);
  std::remove(path.string().c_str());

  CHECK_THROWS_AS(make_encoder("random:abc:1"), ConfigError);
  CHECK_THROWS(make_encoder("/nonexistent/vectors.txt"));
}

TEST_CASE("the full cli runs gen-data and stats in process") {
  const auto dir = temp_dir("intentrec_cli_test");
  const auto cfg_path = dir / "exp.cfg";
  {
    std::ofstream os(cfg_path);
    os << "corpus.synth.n_apps = 6\ncorpus.synth.n_samples = 40\n";
  }
  const auto out_dir = dir / "out";

  std::string cfg_arg = cfg_path.string();
  std::string out_arg = out_dir.string();
  std::vector<char*> argv;
  char prog[] = "intentrec", cmd[] = "gen-data", copt[] = "--config",
       oopt[] = "--out", sopt[] = "--seed", seed[] = "3";
  argv = {prog, cmd, copt, cfg_arg.data(), oopt, out_arg.data(), sopt, seed};
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 0);
  CHECK(std::filesystem::exists(out_dir / "corpus.jsonl"));
  CHECK(std::filesystem::exists(out_dir / "stats.csv"));

  char stats_cmd[] = "stats";
  argv = {prog, stats_cmd, copt, cfg_arg.data(), oopt, out_arg.data()};
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 0);

  // a config error must map to exit code 2
  {
    std::ofstream os(cfg_path);
    os << "model.kind = unknown\n";
  }
  argv = {prog, cmd, copt, cfg_arg.data(), oopt, out_arg.data()};
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 2);

  std::filesystem::remove_all(dir);
}
