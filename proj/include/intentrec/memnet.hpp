#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intentrec/numerics.hpp"
#include "intentrec/params.hpp"
#include "intentrec/types.hpp"

namespace intentrec {

// Query-augmentation memory network: K hops of attention-weighted memory
// readout added into the query, then a softmax prediction head.
struct MemNetConfig {
  int hops = 1;
  Index dim = 0;
  Index vocab = 0;
  bool share_ab = false;   // tie A^k and B^k (same storage) within each hop
  bool nonlinear = true;   // tanh + bias on every transform; linear drops both
  int head_layers = 1;     // 2 inserts a sigmoid layer before W
  Index head_hidden = 100; // width of that layer
};

// One hop's transforms. When A and B are tied, B/bias_b stay empty and the
// A storage serves both roles. Biases stay empty in the linear variant.
struct MemNetHop {
  Matrix A, B, C;                 // d x d
  Vector bias_a, bias_b, bias_c;  // d
};

struct MemNetParams {
  std::vector<MemNetHop> hops;
  Matrix head_w;      // vocab x d, or vocab x head_hidden
  DenseLayer head_mid;  // sigmoid layer, only when head_layers == 2

  const Matrix& hop_b(std::size_t k, bool share_ab) const {
    return share_ab ? hops[k].A : hops[k].B;
  }
  const Vector& hop_bias_b(std::size_t k, bool share_ab) const {
    return share_ab ? hops[k].bias_a : hops[k].bias_b;
  }
};

struct MemNetOutput {
  Vector scores;                  // softmax over vocab
  std::vector<Vector> attention;  // one simplex vector per hop
};

MemNetParams memnet_init(const MemNetConfig& config, std::uint64_t seed);
ParamRefs memnet_param_refs(MemNetParams& params, const MemNetConfig& config);

MemNetOutput memnet_forward(const MemNetParams& params,
                            const MemNetConfig& config, const Matrix& memory,
                            const Eigen::Ref<const Vector>& q);

// Mean squared-error loss of softmax scores against multi-hot targets over
// the batch (queries and targets are row-per-sample). Gradients accumulate
// into `grads`; with tied A/B both roles flow into the shared buffer.
double memnet_grads(const MemNetParams& params, const MemNetConfig& config,
                    const Matrix& memory, const Matrix& queries,
                    const Matrix& targets, GradSet& grads);

// --- hop-level pieces, shared with the hybrid architecture ---

// Grad-set entry names for one hop under the given sharing scheme.
std::vector<std::string> memnet_hop_param_names(const std::string& prefix,
                                                bool share_ab, bool nonlinear);

MemNetHop memnet_hop_init(Index dim, bool share_ab, bool nonlinear,
                          std::mt19937_64& rng);
void memnet_hop_param_refs(MemNetHop& hop, const std::string& prefix,
                           bool share_ab, bool nonlinear, ParamRefs& refs);

// Memory transforms are query-independent; computed once per batch.
struct MemNetHopShared {
  Matrix m_form;  // phi(X A^T + 1 bias_a^T), M x d
  Matrix c_form;  // phi(X C^T + 1 bias_c^T), M x d
};

MemNetHopShared memnet_transform_memory(const MemNetHop& hop, bool share_ab,
                                        bool nonlinear, const Matrix& memory);

struct MemNetHopTrace {
  Vector q_in;       // hop input
  Vector u;          // phi(B q + bias_b)
  Vector attention;  // softmax of u . m_i
};

// Returns the hop response u + o.
Vector memnet_hop_forward(const MemNetHop& hop, bool share_ab, bool nonlinear,
                          const MemNetHopShared& shared,
                          const Eigen::Ref<const Vector>& q,
                          MemNetHopTrace* trace);

// Backward for one query through one hop. Accumulates the B-role and bias
// gradients directly; memory-transform pre-activation gradients accumulate
// into dm_pre/dc_pre so the (M x d) x (M x d) products against X run once
// per batch via memnet_hop_apply_memory_grads. Returns dL/d(hop input).
Vector memnet_hop_backward(const MemNetHop& hop, bool share_ab, bool nonlinear,
                           const MemNetHopShared& shared,
                           const MemNetHopTrace& trace,
                           const Eigen::Ref<const Vector>& dq_out,
                           Matrix& dm_pre, Matrix& dc_pre, GradSet& grads,
                           const std::string& prefix);

void memnet_hop_apply_memory_grads(const Matrix& memory, const Matrix& dm_pre,
                                   const Matrix& dc_pre, bool share_ab,
                                   bool nonlinear, GradSet& grads,
                                   const std::string& prefix);

}  // namespace intentrec
