#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "intentrec/params.hpp"

using namespace intentrec;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("param views expose matrix and vector storage") {
  Matrix m = Matrix::Zero(2, 3);
  Vector v = Vector::Zero(4);
  ParamView pm = param_view("m", m);
  ParamView pv = param_view("v", v);
  CHECK(pm.rows == 2);
  CHECK(pm.cols == 3);
  CHECK(pm.size() == 6);
  CHECK(pv.rows == 4);
  CHECK(pv.cols == 1);

  pm.map()(1, 2) = 5.0;
  CHECK(m(1, 2) == 5.0);  // view writes through to the owner
  pv.map()(3, 0) = -1.0;
  CHECK(v(3) == -1.0);
}

TEST_CASE("grad set mirrors the parameter layout") {
  Matrix a = Matrix::Ones(3, 2);
  Vector b = Vector::Ones(3);
  ParamRefs refs{param_view("a", a), param_view("b", b)};
  GradSet g = GradSet::zeros_like(refs);

  CHECK(g.entries().size() == 2);
  CHECK(g.mat("a").rows() == 3);
  CHECK(g.mat("a").cols() == 2);
  CHECK(g.mat("a").lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(g.vec("b").size() == 3);

  g.mat("a").setConstant(2.0);
  CHECK(g.all_finite());
  g.mat("a")(0, 0) = std::nan("");
  CHECK_FALSE(g.all_finite());
  g.set_zero();
  CHECK(g.mat("a").lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(g.all_finite());

  CHECK_THROWS(g.mat("missing"));
}

TEST_CASE("adam matches an independently coded scalar recurrence") {
  Vector p(1);
  p << 0.3;
  ParamRefs refs{param_view("p", p)};
  AdamHyper hyper;
  hyper.alpha = 0.01;
  AdamState state = AdamState::init(refs, hyper);
  GradSet g = GradSet::zeros_like(refs);

  // reference trace computed with the textbook update, scalar arithmetic only
  double x = 0.3, m = 0.0, v = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> grad_dist(-2.0, 2.0);
  for (int t = 1; t <= 25; ++t) {
    const double grad = grad_dist(rng);
    g.vec("p")(0) = grad;
    adam_step(refs, g, state);

    m = hyper.beta1 * m + (1 - hyper.beta1) * grad;
    v = hyper.beta2 * v + (1 - hyper.beta2) * grad * grad;
    const double m_hat = m / (1 - std::pow(hyper.beta1, t));
    const double v_hat = v / (1 - std::pow(hyper.beta2, t));
    x -= hyper.alpha * m_hat / (std::sqrt(v_hat) + hyper.eps);

    CHECK(p(0) == doctest::Approx(x).epsilon(1e-13));
  }
  CHECK(state.t == 25);
}

TEST_CASE("adam applies elementwise updates across tensors") {
  Matrix a = Matrix::Zero(2, 2);
  Vector b = Vector::Zero(2);
  ParamRefs refs{param_view("a", a), param_view("b", b)};
  AdamState state = AdamState::init(refs, {});
  GradSet g = GradSet::zeros_like(refs);
  g.mat("a") << 1.0, -1.0, 2.0, 0.0;
  g.vec("b") << 0.5, -0.5;
  adam_step(refs, g, state);

  // first step moves each coordinate by about alpha in the -sign(g) direction
  const double step = 1e-3;
  CHECK(a(0, 0) == doctest::Approx(-step).epsilon(1e-4));
  CHECK(a(0, 1) == doctest::Approx(step).epsilon(1e-4));
  CHECK(a(1, 0) == doctest::Approx(-step).epsilon(1e-4));
  CHECK(a(1, 1) == 0.0);  // zero gradient leaves the coordinate in place
  CHECK(b(0) == doctest::Approx(-step).epsilon(1e-4));
  CHECK(b(1) == doctest::Approx(step).epsilon(1e-4));
}

TEST_CASE("grad check accepts exact gradients and flags corrupted ones") {
  Matrix w(2, 2);
  w << 0.4, -0.2, 0.1, 0.9;
  ParamRefs refs{param_view("w", w)};

  // L = sum c_ij w_ij^2 with analytic gradient 2 c_ij w_ij
  Matrix c(2, 2);
  c << 1.0, 2.0, 3.0, 4.0;
  const auto loss_fn = [&]() { return (c.array() * w.array().square()).sum(); };

  GradSet g = GradSet::zeros_like(refs);
  g.mat("w") = 2.0 * c.array() * w.array();
  CHECK(grad_check(refs, g, loss_fn, 1e-5) < 1e-8);

  g.mat("w")(1, 1) += 0.5;  // injected fault must be caught
  CHECK(grad_check(refs, g, loss_fn, 1e-5) > 1e-2);
}

TEST_CASE("grad check leaves parameters untouched") {
  Vector p(3);
  p << 1.0, 2.0, 3.0;
  const Vector before = p;
  ParamRefs refs{param_view("p", p)};
  GradSet g = GradSet::zeros_like(refs);
  g.vec("p") = 2.0 * p;
  const auto loss_fn = [&]() { return p.squaredNorm(); };
  grad_check(refs, g, loss_fn, 1e-5);
  CHECK((p - before).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("checkpoints round trip bit exactly") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Matrix a(3, 4);
  Vector b(5);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  for (Index i = 0; i < b.size(); ++i) b(i) = u(rng);
  ParamRefs refs{param_view("layer.W", a), param_view("layer.b", b)};

  const std::string path = temp_path("intentrec_ckpt_test.bin");
  save_checkpoint(path, refs);

  const auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].first == "layer.W");
  CHECK(loaded[1].first == "layer.b");
  CHECK((loaded[0].second - a).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((loaded[1].second - b).lpNorm<Eigen::Infinity>() == 0.0);

  Matrix a2 = Matrix::Zero(3, 4);
  Vector b2 = Vector::Zero(5);
  ParamRefs refs2{param_view("layer.W", a2), param_view("layer.b", b2)};
  load_checkpoint_into(path, refs2);
  CHECK((a2 - a).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((b2 - b).lpNorm<Eigen::Infinity>() == 0.0);

  std::remove(path.c_str());
}

TEST_CASE("checkpoint loading rejects mismatched layouts") {
  Matrix a = Matrix::Ones(2, 2);
  ParamRefs refs{param_view("a", a)};
  const std::string path = temp_path("intentrec_ckpt_mismatch.bin");
  save_checkpoint(path, refs);

  Matrix wrong_shape = Matrix::Zero(3, 2);
  ParamRefs bad_shape{param_view("a", wrong_shape)};
  CHECK_THROWS(load_checkpoint_into(path, bad_shape));

  Matrix other = Matrix::Zero(2, 2);
  ParamRefs bad_name{param_view("b", other)};
  CHECK_THROWS(load_checkpoint_into(path, bad_name));

  CHECK_THROWS(load_checkpoint("/nonexistent/dir/ckpt.bin"));
  std::remove(path.c_str());
}

TEST_CASE("snapshot and restore round trip parameter values") {
  Matrix a = Matrix::Random(2, 3);
  Vector b = Vector::Random(4);
  ParamRefs refs{param_view("a", a), param_view("b", b)};
  const auto snap = snapshot_params(refs);

  a.setZero();
  b.setZero();
  restore_params(refs, snap);
  CHECK((a - snap[0].second).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((b - snap[1].second).lpNorm<Eigen::Infinity>() == 0.0);
}
