#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "intentrec/memnet.hpp"

using namespace intentrec;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = u(rng);
  return m;
}

Matrix multi_hot_targets(Index rows, Index vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<Index> pick(0, vocab - 1);
  Matrix t = Matrix::Zero(rows, vocab);
  for (Index r = 0; r < rows; ++r) {
    t(r, pick(rng)) = 1.0;
    t(r, pick(rng)) = 1.0;  // occasionally collapses to a single label
  }
  return t;
}

}  // namespace

TEST_CASE("init honours the sharing and linearity switches") {
  MemNetConfig cfg;
  cfg.dim = 4;
  cfg.vocab = 5;
  cfg.hops = 2;

  cfg.share_ab = true;
  MemNetParams shared = memnet_init(cfg, 1);
  REQUIRE(shared.hops.size() == 2);
  CHECK(shared.hops[0].B.size() == 0);  // tied storage, B stays empty
  CHECK(shared.hops[0].bias_b.size() == 0);
  CHECK(&shared.hop_b(0, true) == &shared.hops[0].A);

  cfg.share_ab = false;
  cfg.nonlinear = false;
  MemNetParams linear = memnet_init(cfg, 1);
  CHECK(linear.hops[0].B.rows() == 4);
  CHECK(linear.hops[0].bias_a.size() == 0);  // linear variant drops biases
  CHECK(linear.hops[0].bias_c.size() == 0);

  cfg.nonlinear = true;
  cfg.head_layers = 2;
  cfg.head_hidden = 7;
  MemNetParams two_layer = memnet_init(cfg, 1);
  CHECK(two_layer.head_mid.out_dim() == 7);
  CHECK(two_layer.head_w.cols() == 7);
  CHECK(two_layer.head_w.rows() == 5);
}

TEST_CASE("param refs name every live tensor exactly once") {
  MemNetConfig cfg;
  cfg.dim = 3;
  cfg.vocab = 4;
  cfg.hops = 1;
  cfg.share_ab = true;
  MemNetParams p = memnet_init(cfg, 2);
  ParamRefs refs = memnet_param_refs(p, cfg);

  std::vector<std::string> names;
  for (const auto& r : refs) names.push_back(r.name);
  CHECK(names == std::vector<std::string>{"hop0.AB", "hop0.bias_AB", "hop0.C",
                                          "hop0.bias_C", "head.W"});

  cfg.share_ab = false;
  MemNetParams q = memnet_init(cfg, 2);
  refs = memnet_param_refs(q, cfg);
  names.clear();
  for (const auto& r : refs) names.push_back(r.name);
  CHECK(names == std::vector<std::string>{"hop0.A", "hop0.bias_A", "hop0.B",
                                          "hop0.bias_B", "hop0.C",
                                          "hop0.bias_C", "head.W"});
}

TEST_CASE("forward yields simplex attention per hop and softmax scores") {
  MemNetConfig cfg;
  cfg.dim = 5;
  cfg.vocab = 6;
  cfg.hops = 3;
  MemNetParams p = memnet_init(cfg, 3);

  std::mt19937_64 rng(4);
  const Matrix memory = random_matrix(4, 5, rng);
  const Vector q = random_matrix(5, 1, rng).col(0);

  const MemNetOutput out = memnet_forward(p, cfg, memory, q);
  CHECK(out.scores.size() == 6);
  CHECK(std::abs(out.scores.sum() - 1.0) < 1e-12);
  REQUIRE(out.attention.size() == 3);
  for (const Vector& a : out.attention) {
    CHECK(a.size() == 4);
    CHECK(std::abs(a.sum() - 1.0) < 1e-12);
    CHECK(a.minCoeff() >= 0.0);
  }
}

TEST_CASE("a single memory row receives attention exactly one") {
  MemNetConfig cfg;
  cfg.dim = 4;
  cfg.vocab = 3;
  MemNetParams p = memnet_init(cfg, 5);
  std::mt19937_64 rng(6);
  const Matrix memory = random_matrix(1, 4, rng);
  const Vector q = random_matrix(4, 1, rng).col(0);
  const MemNetOutput out = memnet_forward(p, cfg, memory, q);
  CHECK(out.attention[0].size() == 1);
  CHECK(out.attention[0](0) == 1.0);
}

TEST_CASE("memory transforms match the written formula") {
  std::mt19937_64 rng(8);
  MemNetHop hop = memnet_hop_init(3, false, true, rng);
  const Matrix memory = random_matrix(2, 3, rng);

  const MemNetHopShared shared = memnet_transform_memory(hop, false, true, memory);
  for (Index i = 0; i < 2; ++i) {
    const Vector mi = (hop.A * memory.row(i).transpose() + hop.bias_a)
                          .array().tanh();
    const Vector ci = (hop.C * memory.row(i).transpose() + hop.bias_c)
                          .array().tanh();
    CHECK((shared.m_form.row(i).transpose() - mi).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((shared.c_form.row(i).transpose() - ci).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  MemNetHop lin = memnet_hop_init(3, false, false, rng);
  const MemNetHopShared ls = memnet_transform_memory(lin, false, false, memory);
  CHECK((ls.m_form - memory * lin.A.transpose()).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("hop trace records the attention actually used") {
  std::mt19937_64 rng(9);
  MemNetHop hop = memnet_hop_init(4, false, true, rng);
  const Matrix memory = random_matrix(3, 4, rng);
  const MemNetHopShared shared = memnet_transform_memory(hop, false, true, memory);
  const Vector q = random_matrix(4, 1, rng).col(0);

  MemNetHopTrace trace;
  const Vector response = memnet_hop_forward(hop, false, true, shared, q, &trace);

  const Vector u = (hop.B * q + hop.bias_b).array().tanh();
  CHECK((trace.u - u).lpNorm<Eigen::Infinity>() < 1e-14);
  const Vector logits = shared.m_form * u;
  const Vector att = softmax(logits);
  CHECK((trace.attention - att).lpNorm<Eigen::Infinity>() < 1e-14);
  const Vector o = shared.c_form.transpose() * att;
  CHECK((response - (u + o)).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("gradients agree with central differences across the variant grid") {
  std::mt19937_64 rng(10);
  const Index dim = 4, vocab = 5, mem_rows = 3, batch = 2;

  for (int hops : {1, 3}) {
    for (bool share : {false, true}) {
      for (bool nonlinear : {true, false}) {
        CAPTURE(hops);
        CAPTURE(share);
        CAPTURE(nonlinear);
        MemNetConfig cfg;
        cfg.hops = hops;
        cfg.dim = dim;
        cfg.vocab = vocab;
        cfg.share_ab = share;
        cfg.nonlinear = nonlinear;
        MemNetParams params = memnet_init(cfg, 30 + hops);
        ParamRefs refs = memnet_param_refs(params, cfg);

        const Matrix memory = random_matrix(mem_rows, dim, rng);
        const Matrix queries = random_matrix(batch, dim, rng);
        const Matrix targets = multi_hot_targets(batch, vocab, rng);

        GradSet grads = GradSet::zeros_like(refs);
        memnet_grads(params, cfg, memory, queries, targets, grads);
        GradSet scratch = GradSet::zeros_like(refs);
        const auto loss_fn = [&]() {
          scratch.set_zero();
          return memnet_grads(params, cfg, memory, queries, targets, scratch);
        };
        CHECK(grad_check(refs, grads, loss_fn, 1e-5) < 1e-6);
      }
    }
  }
}

TEST_CASE("the two-layer head trains with correct gradients too") {
  std::mt19937_64 rng(12);
  MemNetConfig cfg;
  cfg.dim = 4;
  cfg.vocab = 4;
  cfg.head_layers = 2;
  cfg.head_hidden = 6;
  MemNetParams params = memnet_init(cfg, 40);
  ParamRefs refs = memnet_param_refs(params, cfg);

  const Matrix memory = random_matrix(3, 4, rng);
  const Matrix queries = random_matrix(2, 4, rng);
  const Matrix targets = multi_hot_targets(2, 4, rng);

  GradSet grads = GradSet::zeros_like(refs);
  memnet_grads(params, cfg, memory, queries, targets, grads);
  GradSet scratch = GradSet::zeros_like(refs);
  const auto loss_fn = [&]() {
    scratch.set_zero();
    return memnet_grads(params, cfg, memory, queries, targets, scratch);
  };
  CHECK(grad_check(refs, grads, loss_fn, 1e-5) < 1e-6);
}
