#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "intentrec/types.hpp"

namespace intentrec {

// Flat view over one named parameter tensor owned by a model.
// Biases are exposed as n x 1.
struct ParamView {
  std::string name;
  double* data = nullptr;
  Index rows = 0;
  Index cols = 0;

  Index size() const { return rows * cols; }
  Eigen::Map<Matrix> map() { return {data, rows, cols}; }
  Eigen::Map<const Matrix> map() const { return {data, rows, cols}; }
};

using ParamRefs = std::vector<ParamView>;

ParamView param_view(std::string name, Matrix& m);
ParamView param_view(std::string name, Vector& v);

// Named gradient buffers mirroring a parameter set.
class GradSet {
 public:
  GradSet() = default;
  static GradSet zeros_like(const ParamRefs& params);

  Matrix& mat(const std::string& name);
  const Matrix& mat(const std::string& name) const;
  Eigen::Ref<Vector> vec(const std::string& name);

  void set_zero();
  double* flat(const std::string& name);
  bool all_finite() const;

  const std::vector<std::pair<std::string, Matrix>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, Matrix>> entries_;
};

struct AdamHyper {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::int64_t t = 0;
  // first/second moment buffers, aligned with the parameter order
  std::vector<std::pair<std::string, std::pair<Matrix, Matrix>>> moments;

  static AdamState init(const ParamRefs& params, AdamHyper hyper = {});
};

// Bias-corrected Adam update, in place. Increments state.t.
void adam_step(ParamRefs& params, const GradSet& grads, AdamState& state);

// Central-difference check of `analytic` against loss_fn, which must evaluate
// the loss at the parameters' current values. Returns the max over all
// coordinates of |a - n| / max(1e-8, |a| + |n|).
double grad_check(ParamRefs& params, const GradSet& analytic,
                  const std::function<double()>& loss_fn, double epsilon);

// Binary checkpoint container: name -> shape -> row-major doubles.
// Round trips are bit-exact.
void save_checkpoint(const std::string& path, const ParamRefs& params);
std::vector<std::pair<std::string, Matrix>> load_checkpoint(
    const std::string& path);
// Loads into an existing parameter set; names and shapes must match exactly.
void load_checkpoint_into(const std::string& path, ParamRefs& params);

// Copy helpers used by the trainer to snapshot/restore best-restart weights.
std::vector<std::pair<std::string, Matrix>> snapshot_params(
    const ParamRefs& params);
void restore_params(ParamRefs& params,
                    const std::vector<std::pair<std::string, Matrix>>& snap);

}  // namespace intentrec
