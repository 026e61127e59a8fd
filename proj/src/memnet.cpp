#include "intentrec/memnet.hpp"

#include <stdexcept>

namespace intentrec {

namespace {

void check_config(const MemNetConfig& config) {
  if (config.hops < 1)
    throw std::invalid_argument("memnet: hops must be >= 1");
  if (config.dim < 1) throw std::invalid_argument("memnet: dim must be >= 1");
  if (config.vocab < 1)
    throw std::invalid_argument("memnet: vocab must be >= 1");
  if (config.head_layers != 1 && config.head_layers != 2)
    throw std::invalid_argument("memnet: head_layers must be 1 or 2");
}

void check_inputs(const MemNetConfig& config, const Matrix& memory,
                  Index query_dim) {
  if (memory.rows() < 1)
    throw std::invalid_argument("memnet: empty memory");
  if (memory.cols() != config.dim)
    throw std::invalid_argument("memnet: memory dim mismatch");
  if (query_dim != config.dim)
    throw std::invalid_argument("memnet: query dim mismatch");
}

}  // namespace

MemNetHop memnet_hop_init(Index dim, bool share_ab, bool nonlinear,
                          std::mt19937_64& rng) {
  MemNetHop hop;
  hop.A = glorot_uniform(dim, dim, rng);
  if (!share_ab) hop.B = glorot_uniform(dim, dim, rng);
  hop.C = glorot_uniform(dim, dim, rng);
  if (nonlinear) {
    hop.bias_a = Vector::Zero(dim);
    if (!share_ab) hop.bias_b = Vector::Zero(dim);
    hop.bias_c = Vector::Zero(dim);
  }
  return hop;
}

std::vector<std::string> memnet_hop_param_names(const std::string& prefix,
                                                bool share_ab,
                                                bool nonlinear) {
  std::vector<std::string> names;
  if (share_ab) {
    names.push_back(prefix + ".AB");
    if (nonlinear) names.push_back(prefix + ".bias_AB");
  } else {
    names.push_back(prefix + ".A");
    if (nonlinear) names.push_back(prefix + ".bias_A");
    names.push_back(prefix + ".B");
    if (nonlinear) names.push_back(prefix + ".bias_B");
  }
  names.push_back(prefix + ".C");
  if (nonlinear) names.push_back(prefix + ".bias_C");
  return names;
}

void memnet_hop_param_refs(MemNetHop& hop, const std::string& prefix,
                           bool share_ab, bool nonlinear, ParamRefs& refs) {
  if (share_ab) {
    refs.push_back(param_view(prefix + ".AB", hop.A));
    if (nonlinear) refs.push_back(param_view(prefix + ".bias_AB", hop.bias_a));
  } else {
    refs.push_back(param_view(prefix + ".A", hop.A));
    if (nonlinear) refs.push_back(param_view(prefix + ".bias_A", hop.bias_a));
    refs.push_back(param_view(prefix + ".B", hop.B));
    if (nonlinear) refs.push_back(param_view(prefix + ".bias_B", hop.bias_b));
  }
  refs.push_back(param_view(prefix + ".C", hop.C));
  if (nonlinear) refs.push_back(param_view(prefix + ".bias_C", hop.bias_c));
}

MemNetParams memnet_init(const MemNetConfig& config, std::uint64_t seed) {
  check_config(config);
  std::mt19937_64 rng(seed);
  MemNetParams params;
  params.hops.reserve(static_cast<std::size_t>(config.hops));
  for (int k = 0; k < config.hops; ++k)
    params.hops.push_back(
        memnet_hop_init(config.dim, config.share_ab, config.nonlinear, rng));
  if (config.head_layers == 2) {
    params.head_mid = make_dense_layer(config.head_hidden, config.dim,
                                       Activation::Sigmoid, rng);
    params.head_w = glorot_uniform(config.vocab, config.head_hidden, rng);
  } else {
    params.head_w = glorot_uniform(config.vocab, config.dim, rng);
  }
  return params;
}

ParamRefs memnet_param_refs(MemNetParams& params, const MemNetConfig& config) {
  ParamRefs refs;
  for (std::size_t k = 0; k < params.hops.size(); ++k)
    memnet_hop_param_refs(params.hops[k], "hop" + std::to_string(k),
                          config.share_ab, config.nonlinear, refs);
  if (config.head_layers == 2) {
    refs.push_back(param_view("head.H", params.head_mid.W));
    refs.push_back(param_view("head.bias_H", params.head_mid.b));
  }
  refs.push_back(param_view("head.W", params.head_w));
  return refs;
}

MemNetHopShared memnet_transform_memory(const MemNetHop& hop, bool share_ab,
                                        bool nonlinear, const Matrix& memory) {
  MemNetHopShared shared;
  shared.m_form = memory * hop.A.transpose();
  shared.c_form = memory * hop.C.transpose();
  if (nonlinear) {
    shared.m_form.rowwise() += hop.bias_a.transpose();
    shared.c_form.rowwise() += hop.bias_c.transpose();
    shared.m_form = shared.m_form.array().tanh();
    shared.c_form = shared.c_form.array().tanh();
  }
  (void)share_ab;
  return shared;
}

Vector memnet_hop_forward(const MemNetHop& hop, bool share_ab, bool nonlinear,
                          const MemNetHopShared& shared,
                          const Eigen::Ref<const Vector>& q,
                          MemNetHopTrace* trace) {
  const Matrix& b_mat = share_ab ? hop.A : hop.B;
  Vector u = b_mat * q;
  if (nonlinear) {
    u += share_ab ? hop.bias_a : hop.bias_b;
    u = u.array().tanh();
  }
  const Vector p = softmax(shared.m_form * u);
  const Vector o = shared.c_form.transpose() * p;
  if (trace) {
    trace->q_in = q;
    trace->u = u;
    trace->attention = p;
  }
  return u + o;
}

Vector memnet_hop_backward(const MemNetHop& hop, bool share_ab, bool nonlinear,
                           const MemNetHopShared& shared,
                           const MemNetHopTrace& trace,
                           const Eigen::Ref<const Vector>& dq_out,
                           Matrix& dm_pre, Matrix& dc_pre, GradSet& grads,
                           const std::string& prefix) {
  // response = u + o, so dq_out feeds both the readout and the residual
  Vector du = dq_out;
  const Vector& do_ = dq_out;

  // o = c_form^T p
  Vector dp = shared.c_form * do_;
  Matrix dc_form = trace.attention * do_.transpose();

  // p = softmax(z), z = m_form u
  const Vector& p = trace.attention;
  Vector dz = p.array() * (dp.array() - p.dot(dp));
  Matrix dm_form = dz * trace.u.transpose();
  du += shared.m_form.transpose() * dz;

  // memory transforms: defer the X products to the batch level
  if (nonlinear) {
    dm_pre.array() += dm_form.array() * (1.0 - shared.m_form.array().square());
    dc_pre.array() += dc_form.array() * (1.0 - shared.c_form.array().square());
  } else {
    dm_pre += dm_form;
    dc_pre += dc_form;
  }

  // u = phi(B q + bias_b)
  Vector du_pre = du;
  if (nonlinear)
    du_pre.array() *= (1.0 - trace.u.array().square());
  const std::string b_name = share_ab ? prefix + ".AB" : prefix + ".B";
  grads.mat(b_name).noalias() += du_pre * trace.q_in.transpose();
  if (nonlinear) {
    const std::string bb_name =
        share_ab ? prefix + ".bias_AB" : prefix + ".bias_B";
    grads.vec(bb_name) += du_pre;
  }
  const Matrix& b_mat = share_ab ? hop.A : hop.B;
  return b_mat.transpose() * du_pre;
}

void memnet_hop_apply_memory_grads(const Matrix& memory, const Matrix& dm_pre,
                                   const Matrix& dc_pre, bool share_ab,
                                   bool nonlinear, GradSet& grads,
                                   const std::string& prefix) {
  const std::string a_name = share_ab ? prefix + ".AB" : prefix + ".A";
  grads.mat(a_name).noalias() += dm_pre.transpose() * memory;
  grads.mat(prefix + ".C").noalias() += dc_pre.transpose() * memory;
  if (nonlinear) {
    const std::string ba_name =
        share_ab ? prefix + ".bias_AB" : prefix + ".bias_A";
    grads.vec(ba_name) += dm_pre.colwise().sum().transpose();
    grads.vec(prefix + ".bias_C") += dc_pre.colwise().sum().transpose();
  }
}

namespace {

struct HeadTrace {
  Vector v;       // final hop response
  Vector mid;     // sigmoid layer output (head_layers == 2)
  Vector scores;  // softmax output
};

Vector head_forward(const MemNetParams& params, const MemNetConfig& config,
                    const Vector& v, HeadTrace* trace) {
  Vector scores;
  Vector mid;
  if (config.head_layers == 2) {
    mid = params.head_mid.forward(v);
    scores = softmax(params.head_w * mid);
  } else {
    scores = softmax(params.head_w * v);
  }
  if (trace) {
    trace->v = v;
    trace->mid = mid;
    trace->scores = scores;
  }
  return scores;
}

// dL/dscores -> dL/dv, accumulating head gradients.
Vector head_backward(const MemNetParams& params, const MemNetConfig& config,
                     const HeadTrace& trace, const Vector& dscores,
                     GradSet& grads) {
  const Vector& s = trace.scores;
  Vector dlogits = s.array() * (dscores.array() - s.dot(dscores));
  if (config.head_layers == 2) {
    grads.mat("head.W").noalias() += dlogits * trace.mid.transpose();
    Vector dmid = params.head_w.transpose() * dlogits;
    Vector dmid_pre =
        dmid.array() * trace.mid.array() * (1.0 - trace.mid.array());
    grads.mat("head.H").noalias() += dmid_pre * trace.v.transpose();
    grads.vec("head.bias_H") += dmid_pre;
    return params.head_mid.W.transpose() * dmid_pre;
  }
  grads.mat("head.W").noalias() += dlogits * trace.v.transpose();
  return params.head_w.transpose() * dlogits;
}

}  // namespace

MemNetOutput memnet_forward(const MemNetParams& params,
                            const MemNetConfig& config, const Matrix& memory,
                            const Eigen::Ref<const Vector>& q) {
  check_config(config);
  check_inputs(config, memory, q.size());

  MemNetOutput out;
  Vector current = q;
  for (std::size_t k = 0; k < params.hops.size(); ++k) {
    const auto shared = memnet_transform_memory(params.hops[k],
                                                config.share_ab,
                                                config.nonlinear, memory);
    MemNetHopTrace trace;
    current = memnet_hop_forward(params.hops[k], config.share_ab,
                                 config.nonlinear, shared, current, &trace);
    out.attention.push_back(std::move(trace.attention));
  }
  out.scores = head_forward(params, config, current, nullptr);
  return out;
}

double memnet_grads(const MemNetParams& params, const MemNetConfig& config,
                    const Matrix& memory, const Matrix& queries,
                    const Matrix& targets, GradSet& grads) {
  check_config(config);
  check_inputs(config, memory, queries.cols());
  if (queries.rows() != targets.rows())
    throw std::invalid_argument("memnet_grads: batch size mismatch");
  if (targets.cols() != config.vocab)
    throw std::invalid_argument("memnet_grads: target width mismatch");

  const auto n_hops = params.hops.size();
  std::vector<MemNetHopShared> shared(n_hops);
  std::vector<Matrix> dm_pre(n_hops), dc_pre(n_hops);
  for (std::size_t k = 0; k < n_hops; ++k) {
    shared[k] = memnet_transform_memory(params.hops[k], config.share_ab,
                                        config.nonlinear, memory);
    dm_pre[k] = Matrix::Zero(memory.rows(), memory.cols());
    dc_pre[k] = Matrix::Zero(memory.rows(), memory.cols());
  }

  const Index batch = queries.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total_loss = 0.0;

  for (Index i = 0; i < batch; ++i) {
    std::vector<MemNetHopTrace> traces(n_hops);
    Vector current = queries.row(i);
    for (std::size_t k = 0; k < n_hops; ++k)
      current = memnet_hop_forward(params.hops[k], config.share_ab,
                                   config.nonlinear, shared[k], current,
                                   &traces[k]);
    HeadTrace head;
    head_forward(params, config, current, &head);

    auto [loss, dscores] = sse_loss(head.scores, targets.row(i).transpose());
    total_loss += loss * inv_batch;
    dscores *= inv_batch;

    Vector dq = head_backward(params, config, head, dscores, grads);
    for (std::size_t k = n_hops; k-- > 0;) {
      const std::string prefix = "hop" + std::to_string(k);
      dq = memnet_hop_backward(params.hops[k], config.share_ab,
                               config.nonlinear, shared[k], traces[k], dq,
                               dm_pre[k], dc_pre[k], grads, prefix);
    }
  }

  for (std::size_t k = 0; k < n_hops; ++k)
    memnet_hop_apply_memory_grads(memory, dm_pre[k], dc_pre[k],
                                  config.share_ab, config.nonlinear, grads,
                                  "hop" + std::to_string(k));
  return total_loss;
}

}  // namespace intentrec
