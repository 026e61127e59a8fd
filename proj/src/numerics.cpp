#include "intentrec/numerics.hpp"

#include <cmath>

namespace intentrec {

Vector softmax(const Eigen::Ref<const Vector>& v) {
  if (!v.allFinite()) throw std::invalid_argument("softmax: non-finite input");
  if (v.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double m = v.maxCoeff();
  Vector e = (v.array() - m).exp();
  return e / e.sum();
}

double cosine_similarity(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return a.dot(b) / (na * nb);
}

std::pair<double, Vector> sse_loss(const Eigen::Ref<const Vector>& pred,
                                   const Eigen::Ref<const Vector>& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("sse_loss: length mismatch");
  const double n = static_cast<double>(pred.size());
  Vector diff = pred - target;
  const double loss = diff.squaredNorm() / n;
  return {loss, Vector((2.0 / n) * diff)};
}

std::pair<double, Vector> softmax_cross_entropy(
    const Eigen::Ref<const Vector>& logits,
    const Eigen::Ref<const Vector>& target) {
  if (logits.size() != target.size())
    throw std::invalid_argument("softmax_cross_entropy: length mismatch");
  if ((target.array() < 0.0).any())
    throw std::invalid_argument("softmax_cross_entropy: negative target entry");
  if (std::abs(target.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("softmax_cross_entropy: target must sum to 1");
  Vector s = softmax(logits);
  // log s computed from the shifted logits directly for stability
  const double m = logits.maxCoeff();
  Vector shifted = logits.array() - m;
  const double logz = std::log(shifted.array().exp().sum());
  double loss = 0.0;
  for (Index i = 0; i < logits.size(); ++i) {
    if (target[i] > 0.0) loss -= target[i] * (shifted[i] - logz);
  }
  return {loss, Vector(s - target)};
}

Vector apply_activation(Activation act, const Eigen::Ref<const Vector>& z) {
  switch (act) {
    case Activation::Identity:
      return z;
    case Activation::Tanh:
      return z.array().tanh();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp()));
    case Activation::Softmax:
      return softmax(z);
  }
  throw std::logic_error("apply_activation: unknown activation");
}

Vector activation_grad_from_output(Activation act,
                                   const Eigen::Ref<const Vector>& y) {
  switch (act) {
    case Activation::Identity:
      return Vector::Ones(y.size());
    case Activation::Tanh:
      return 1.0 - y.array().square();
    case Activation::Sigmoid:
      return y.array() * (1.0 - y.array());
    case Activation::Softmax:
      throw std::logic_error(
          "activation_grad_from_output: softmax has no elementwise derivative");
  }
  throw std::logic_error("activation_grad_from_output: unknown activation");
}

Vector DenseLayer::forward(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != W.cols())
    throw std::invalid_argument("DenseLayer::forward: input dim mismatch");
  return apply_activation(act, W * x + b);
}

Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

DenseLayer make_dense_layer(Index out, Index in, Activation act,
                            std::mt19937_64& rng) {
  DenseLayer layer;
  layer.W = glorot_uniform(out, in, rng);
  layer.b = Vector::Zero(out);
  layer.act = act;
  return layer;
}

}  // namespace intentrec
