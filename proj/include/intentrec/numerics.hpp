#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>

#include "intentrec/types.hpp"

namespace intentrec {

// Numerically stable softmax (max subtraction). Throws on non-finite input.
Vector softmax(const Eigen::Ref<const Vector>& v);

// a.b / (|a||b|). Returns 0 when either norm is below 1e-12 so that
// all-zero sentence vectors cannot produce NaNs downstream.
double cosine_similarity(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b);

// Squared-error loss normalized by length: L = (1/N) sum (p_i - t_i)^2.
// Gradient w.r.t. pred is (2/N)(p - t).
std::pair<double, Vector> sse_loss(const Eigen::Ref<const Vector>& pred,
                                   const Eigen::Ref<const Vector>& target);

// L = -sum t_i log softmax(z)_i with grad_z = softmax(z) - t.
// Target entries must be >= 0 and sum to 1 (callers normalize multi-hot).
std::pair<double, Vector> softmax_cross_entropy(
    const Eigen::Ref<const Vector>& logits,
    const Eigen::Ref<const Vector>& target);

enum class Activation { Identity, Tanh, Sigmoid, Softmax };

Vector apply_activation(Activation act, const Eigen::Ref<const Vector>& z);

// Derivative of the activation expressed through its output value y.
// Not defined for Softmax (handled jointly with its loss).
Vector activation_grad_from_output(Activation act,
                                   const Eigen::Ref<const Vector>& y);

struct DenseLayer {
  Matrix W;  // out x in
  Vector b;  // out
  Activation act = Activation::Identity;

  Index in_dim() const { return W.cols(); }
  Index out_dim() const { return W.rows(); }
  Vector forward(const Eigen::Ref<const Vector>& x) const;
};

// Uniform in +-sqrt(6/(fan_in+fan_out)).
Matrix glorot_uniform(Index rows, Index cols, std::mt19937_64& rng);

DenseLayer make_dense_layer(Index out, Index in, Activation act,
                            std::mt19937_64& rng);

}  // namespace intentrec
