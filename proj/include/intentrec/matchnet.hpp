#pragma once

#include <cstdint>
#include <vector>

#include "intentrec/memnet.hpp"
#include "intentrec/numerics.hpp"
#include "intentrec/params.hpp"
#include "intentrec/types.hpp"

namespace intentrec {

// Labelled support set: encoded HLIs and their multi-hot label rows.
struct SupportSet {
  Matrix X;  // M x d
  Matrix Y;  // M x vocab, each row non-zero
};

// hops == 1 is a plain matching network; hops > 1 prepends hops-1
// query-augmentation hops (always the nonlinear variant) whose memory is the
// support X.
struct MatchNetConfig {
  int hops = 1;
  Index dim = 0;
  Index hidden = 300;  // width of the f/g embedding networks
  Index vocab = 0;
  bool share_fg = false;  // tie f and g (and A/B inside every prefix hop)
};

struct MatchNetParams {
  Matrix f_w;      // hidden x dim
  Vector f_b;      // hidden
  Matrix g_w;      // empty when share_fg; f storage serves both roles
  Vector g_b;
  std::vector<MemNetHop> prefix;  // hops-1 entries

  const Matrix& g_mat(bool share_fg) const { return share_fg ? f_w : g_w; }
  const Vector& g_bias(bool share_fg) const { return share_fg ? f_b : g_b; }
};

struct MatchNetOutput {
  Vector y_hat;      // attention-weighted combination of support label rows
  Vector attention;  // simplex over support rows
};

MatchNetParams matchnet_init(const MatchNetConfig& config, std::uint64_t seed);
ParamRefs matchnet_param_refs(MatchNetParams& params,
                              const MatchNetConfig& config);

// softmax over cosine similarities between one embedded query and the
// embedded support rows; rows (or a query) with near-zero norm contribute
// similarity 0.
Vector matching_attention(const Eigen::Ref<const Vector>& f_query,
                          const Matrix& g_support);

// The matching readout alone: a_i = softmax_i cos(f(x), g(x_i)),
// y = sum_i a_i y_i. Ignores any prefix hops.
MatchNetOutput matchnet_forward(const MatchNetParams& params,
                                const MatchNetConfig& config,
                                const SupportSet& support,
                                const Eigen::Ref<const Vector>& x_query);

// Full architecture: hops-1 query-augmentation hops, then the matching
// readout. For hops == 1 this is exactly matchnet_forward.
MatchNetOutput hybrid_forward(const MatchNetParams& params,
                              const MatchNetConfig& config,
                              const SupportSet& support,
                              const Eigen::Ref<const Vector>& q);

// One training step's batch plus its support set.
struct Episode {
  SupportSet support;
  Matrix queries;  // Q x d
  Matrix targets;  // Q x vocab
  std::vector<int> query_indices;    // corpus sample indices, for bookkeeping
  std::vector<int> support_indices;
};

// Mean squared-error loss of y_hat against the multi-hot targets over the
// episode queries; gradients flow through the attention, f, g and any
// prefix hops. Tied storage accumulates both roles.
double matchnet_grads(const MatchNetParams& params,
                      const MatchNetConfig& config, const Episode& episode,
                      GradSet& grads);

}  // namespace intentrec
