#include "intentrec/matchnet.hpp"

#include <stdexcept>
#include <string>

namespace intentrec {

namespace {

constexpr double kNormFloor = 1e-12;

void check_config(const MatchNetConfig& config) {
  if (config.hops < 1)
    throw std::invalid_argument("matchnet: hops must be >= 1");
  if (config.dim < 1)
    throw std::invalid_argument("matchnet: dim must be >= 1");
  if (config.hidden < 1)
    throw std::invalid_argument("matchnet: hidden must be >= 1");
  if (config.vocab < 1)
    throw std::invalid_argument("matchnet: vocab must be >= 1");
}

void check_support(const MatchNetConfig& config, const SupportSet& support) {
  if (support.X.rows() < 1)
    throw std::invalid_argument("matchnet: empty support set");
  if (support.X.rows() != support.Y.rows())
    throw std::invalid_argument("matchnet: support X/Y row mismatch");
  if (support.X.cols() != config.dim)
    throw std::invalid_argument("matchnet: support dim mismatch");
  if (support.Y.cols() != config.vocab)
    throw std::invalid_argument("matchnet: support label width mismatch");
  for (Index i = 0; i < support.Y.rows(); ++i)
    if ((support.Y.row(i).array() == 0.0).all())
      throw std::invalid_argument("matchnet: support row " +
                                  std::to_string(i) + " has empty labels");
}

Vector embed_query(const MatchNetParams& params,
                   const Eigen::Ref<const Vector>& x) {
  return ((params.f_w * x) + params.f_b).array().tanh();
}

Matrix embed_support(const MatchNetParams& params, const MatchNetConfig& config,
                     const Matrix& X) {
  Matrix pre = X * params.g_mat(config.share_fg).transpose();
  pre.rowwise() += params.g_bias(config.share_fg).transpose();
  return pre.array().tanh();
}

// Cosine of fq against every row of gS, with the same zero-norm floor as
// cosine_similarity. Used by both forward and backward so the attention
// values match exactly.
Vector row_cosines(const Eigen::Ref<const Vector>& fq, const Matrix& gS,
                   const Vector& g_norms, double f_norm) {
  Vector sims = Vector::Zero(gS.rows());
  if (f_norm < kNormFloor) return sims;
  const Vector dots = gS * fq;
  for (Index i = 0; i < gS.rows(); ++i)
    if (g_norms(i) >= kNormFloor) sims(i) = dots(i) / (f_norm * g_norms(i));
  return sims;
}

}  // namespace

MatchNetParams matchnet_init(const MatchNetConfig& config, std::uint64_t seed) {
  check_config(config);
  std::mt19937_64 rng(seed);
  MatchNetParams params;
  params.prefix.reserve(static_cast<std::size_t>(config.hops - 1));
  for (int k = 0; k + 1 < config.hops; ++k)
    params.prefix.push_back(
        memnet_hop_init(config.dim, config.share_fg, true, rng));
  params.f_w = glorot_uniform(config.hidden, config.dim, rng);
  params.f_b = Vector::Zero(config.hidden);
  if (!config.share_fg) {
    params.g_w = glorot_uniform(config.hidden, config.dim, rng);
    params.g_b = Vector::Zero(config.hidden);
  }
  return params;
}

ParamRefs matchnet_param_refs(MatchNetParams& params,
                              const MatchNetConfig& config) {
  ParamRefs refs;
  for (std::size_t k = 0; k < params.prefix.size(); ++k)
    memnet_hop_param_refs(params.prefix[k], "prefix" + std::to_string(k),
                          config.share_fg, true, refs);
  if (config.share_fg) {
    refs.push_back(param_view("FG", params.f_w));
    refs.push_back(param_view("bias_FG", params.f_b));
  } else {
    refs.push_back(param_view("F", params.f_w));
    refs.push_back(param_view("bias_F", params.f_b));
    refs.push_back(param_view("G", params.g_w));
    refs.push_back(param_view("bias_G", params.g_b));
  }
  return refs;
}

Vector matching_attention(const Eigen::Ref<const Vector>& f_query,
                          const Matrix& g_support) {
  if (g_support.rows() < 1)
    throw std::invalid_argument("matching_attention: empty support");
  if (g_support.cols() != f_query.size())
    throw std::invalid_argument("matching_attention: dim mismatch");
  const Vector g_norms = g_support.rowwise().norm();
  return softmax(row_cosines(f_query, g_support, g_norms, f_query.norm()));
}

MatchNetOutput matchnet_forward(const MatchNetParams& params,
                                const MatchNetConfig& config,
                                const SupportSet& support,
                                const Eigen::Ref<const Vector>& x_query) {
  check_config(config);
  check_support(config, support);
  if (x_query.size() != config.dim)
    throw std::invalid_argument("matchnet: query dim mismatch");

  const Vector fq = embed_query(params, x_query);
  const Matrix gS = embed_support(params, config, support.X);
  MatchNetOutput out;
  out.attention = matching_attention(fq, gS);
  out.y_hat = support.Y.transpose() * out.attention;
  return out;
}

MatchNetOutput hybrid_forward(const MatchNetParams& params,
                              const MatchNetConfig& config,
                              const SupportSet& support,
                              const Eigen::Ref<const Vector>& q) {
  check_config(config);
  check_support(config, support);
  if (q.size() != config.dim)
    throw std::invalid_argument("matchnet: query dim mismatch");
  if (params.prefix.size() + 1 != static_cast<std::size_t>(config.hops))
    throw std::invalid_argument("matchnet: prefix hop count mismatch");

  Vector current = q;
  for (const auto& hop : params.prefix) {
    const auto shared =
        memnet_transform_memory(hop, config.share_fg, true, support.X);
    current =
        memnet_hop_forward(hop, config.share_fg, true, shared, current, nullptr);
  }
  return matchnet_forward(params, config, support, current);
}

double matchnet_grads(const MatchNetParams& params,
                      const MatchNetConfig& config, const Episode& episode,
                      GradSet& grads) {
  check_config(config);
  check_support(config, episode.support);
  const Matrix& queries = episode.queries;
  const Matrix& targets = episode.targets;
  if (queries.rows() < 1)
    throw std::invalid_argument("matchnet_grads: empty batch");
  if (queries.rows() != targets.rows())
    throw std::invalid_argument("matchnet_grads: batch size mismatch");
  if (queries.cols() != config.dim)
    throw std::invalid_argument("matchnet_grads: query dim mismatch");
  if (targets.cols() != config.vocab)
    throw std::invalid_argument("matchnet_grads: target width mismatch");
  if (params.prefix.size() + 1 != static_cast<std::size_t>(config.hops))
    throw std::invalid_argument("matchnet_grads: prefix hop count mismatch");

  const Matrix& X = episode.support.X;
  const Matrix& Y = episode.support.Y;
  const std::string f_name = config.share_fg ? "FG" : "F";
  const std::string fb_name = config.share_fg ? "bias_FG" : "bias_F";
  const std::string g_name = config.share_fg ? "FG" : "G";
  const std::string gb_name = config.share_fg ? "bias_FG" : "bias_G";

  const auto n_prefix = params.prefix.size();
  std::vector<MemNetHopShared> shared(n_prefix);
  std::vector<Matrix> dm_pre(n_prefix), dc_pre(n_prefix);
  for (std::size_t k = 0; k < n_prefix; ++k) {
    shared[k] =
        memnet_transform_memory(params.prefix[k], config.share_fg, true, X);
    dm_pre[k] = Matrix::Zero(X.rows(), X.cols());
    dc_pre[k] = Matrix::Zero(X.rows(), X.cols());
  }

  const Matrix gS = embed_support(params, config, X);
  const Vector g_norms = gS.rowwise().norm();
  Matrix dg_acc = Matrix::Zero(gS.rows(), gS.cols());  // dL/dgS, batch total

  const Index batch = queries.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  double total_loss = 0.0;

  for (Index i = 0; i < batch; ++i) {
    std::vector<MemNetHopTrace> traces(n_prefix);
    Vector current = queries.row(i);
    for (std::size_t k = 0; k < n_prefix; ++k)
      current = memnet_hop_forward(params.prefix[k], config.share_fg, true,
                                   shared[k], current, &traces[k]);

    const Vector fq = embed_query(params, current);
    const double f_norm = fq.norm();
    const Vector sims = row_cosines(fq, gS, g_norms, f_norm);
    const Vector a = softmax(sims);
    const Vector y_hat = Y.transpose() * a;

    auto [loss, dy] = sse_loss(y_hat, targets.row(i).transpose());
    total_loss += loss * inv_batch;
    dy *= inv_batch;

    // y_hat = Y^T a, a = softmax(sims)
    const Vector da = Y * dy;
    const Vector ds = a.array() * (da.array() - a.dot(da));

    // sims_i = fq . g_i / (|fq||g_i|), constant (grad 0) at the norm floor
    Vector dfq = Vector::Zero(fq.size());
    if (f_norm >= kNormFloor) {
      Vector w = Vector::Zero(ds.size());
      for (Index j = 0; j < ds.size(); ++j)
        if (g_norms(j) >= kNormFloor) w(j) = ds(j) / (f_norm * g_norms(j));
      dfq = gS.transpose() * w;
      dfq.noalias() -= (ds.dot(sims) / (f_norm * f_norm)) * fq;
      dg_acc.noalias() += w * fq.transpose();
      for (Index j = 0; j < ds.size(); ++j)
        if (g_norms(j) >= kNormFloor)
          dg_acc.row(j) -=
              (ds(j) * sims(j) / (g_norms(j) * g_norms(j))) * gS.row(j);
    }

    // fq = tanh(F x + bias_f)
    const Vector df_pre = dfq.array() * (1.0 - fq.array().square());
    grads.mat(f_name).noalias() += df_pre * current.transpose();
    grads.vec(fb_name) += df_pre;

    if (n_prefix > 0) {
      Vector dq = params.f_w.transpose() * df_pre;
      for (std::size_t k = n_prefix; k-- > 0;)
        dq = memnet_hop_backward(params.prefix[k], config.share_fg, true,
                                 shared[k], traces[k], dq, dm_pre[k],
                                 dc_pre[k], grads,
                                 "prefix" + std::to_string(k));
    }
  }

  // gS = tanh(X G^T + 1 bias_g^T)
  const Matrix dg_pre =
      dg_acc.array() * (1.0 - gS.array().square());
  grads.mat(g_name).noalias() += dg_pre.transpose() * X;
  grads.vec(gb_name) += dg_pre.colwise().sum().transpose();

  for (std::size_t k = 0; k < n_prefix; ++k)
    memnet_hop_apply_memory_grads(X, dm_pre[k], dc_pre[k], config.share_fg,
                                  true, grads, "prefix" + std::to_string(k));

  return total_loss;
}

}  // namespace intentrec
