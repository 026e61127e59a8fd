#include "intentrec/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace intentrec {

namespace {

constexpr char kMagic[8] = {'I', 'R', 'C', 'H', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

ParamView param_view(std::string name, Matrix& m) {
  return {std::move(name), m.data(), m.rows(), m.cols()};
}

ParamView param_view(std::string name, Vector& v) {
  return {std::move(name), v.data(), v.size(), 1};
}

GradSet GradSet::zeros_like(const ParamRefs& params) {
  GradSet g;
  g.entries_.reserve(params.size());
  for (const auto& p : params)
    g.entries_.emplace_back(p.name, Matrix::Zero(p.rows, p.cols));
  return g;
}

Matrix& GradSet::mat(const std::string& name) {
  for (auto& [n, m] : entries_)
    if (n == name) return m;
  throw std::out_of_range("GradSet: no entry named " + name);
}

const Matrix& GradSet::mat(const std::string& name) const {
  for (const auto& [n, m] : entries_)
    if (n == name) return m;
  throw std::out_of_range("GradSet: no entry named " + name);
}

Eigen::Ref<Vector> GradSet::vec(const std::string& name) {
  Matrix& m = mat(name);
  if (m.cols() != 1)
    throw std::logic_error("GradSet::vec: entry is not a column: " + name);
  return m.col(0);
}

void GradSet::set_zero() {
  for (auto& [n, m] : entries_) m.setZero();
}

double* GradSet::flat(const std::string& name) { return mat(name).data(); }

bool GradSet::all_finite() const {
  for (const auto& [n, m] : entries_)
    if (!m.allFinite()) return false;
  return true;
}

AdamState AdamState::init(const ParamRefs& params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  s.t = 0;
  s.moments.reserve(params.size());
  for (const auto& p : params)
    s.moments.emplace_back(
        p.name, std::make_pair(Matrix::Zero(p.rows, p.cols),
                               Matrix::Zero(p.rows, p.cols)));
  return s;
}

void adam_step(ParamRefs& params, const GradSet& grads, AdamState& state) {
  if (params.size() != state.moments.size())
    throw std::invalid_argument("adam_step: state does not mirror params");
  state.t += 1;
  const auto& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& [mname, mv] = state.moments[i];
    if (mname != p.name)
      throw std::invalid_argument("adam_step: state order mismatch at " +
                                  p.name);
    const Matrix& g = grads.mat(p.name);
    if (g.rows() != p.rows || g.cols() != p.cols)
      throw std::invalid_argument("adam_step: grad shape mismatch at " +
                                  p.name);
    Matrix& m = mv.first;
    Matrix& v = mv.second;
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v.array().matrix() + (1.0 - h.beta2) * g.array().square().matrix();
    Eigen::Map<Matrix> theta = p.map();
    theta.array() -=
        h.alpha * (m.array() / bc1) / ((v.array() / bc2).sqrt() + h.eps);
  }
}

double grad_check(ParamRefs& params, const GradSet& analytic,
                  const std::function<double()>& loss_fn, double epsilon) {
  double worst = 0.0;
  for (auto& p : params) {
    const Matrix& g = analytic.mat(p.name);
    for (Index i = 0; i < p.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + epsilon;
      const double fp = loss_fn();
      p.data[i] = saved - epsilon;
      const double fm = loss_fn();
      p.data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double a = g.data()[i];
      const double rel = std::abs(a - numeric) /
                         std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

void save_checkpoint(const std::string& path, const ParamRefs& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    write_pod(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_pod(os, static_cast<std::uint64_t>(p.rows));
    write_pod(os, static_cast<std::uint64_t>(p.cols));
    // Eigen default storage is column-major; emit row-major as documented.
    for (Index r = 0; r < p.rows; ++r)
      for (Index c = 0; c < p.cols; ++c) write_pod(os, p.map()(r, c));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

std::vector<std::pair<std::string, Matrix>> load_checkpoint(
    const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  const auto count = read_pod<std::uint32_t>(is);
  std::vector<std::pair<std::string, Matrix>> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = static_cast<Index>(read_pod<std::uint64_t>(is));
    const auto cols = static_cast<Index>(read_pod<std::uint64_t>(is));
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) m(r, c) = read_pod<double>(is);
    out.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

void load_checkpoint_into(const std::string& path, ParamRefs& params) {
  auto loaded = load_checkpoint(path);
  if (loaded.size() != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& [name, m] = loaded[i];
    if (name != p.name)
      throw std::runtime_error("checkpoint: expected parameter " + p.name +
                               ", found " + name);
    if (m.rows() != p.rows || m.cols() != p.cols)
      throw std::runtime_error("checkpoint: shape mismatch at " + p.name);
    p.map() = m;
  }
}

std::vector<std::pair<std::string, Matrix>> snapshot_params(
    const ParamRefs& params) {
  std::vector<std::pair<std::string, Matrix>> snap;
  snap.reserve(params.size());
  for (const auto& p : params) snap.emplace_back(p.name, p.map());
  return snap;
}

void restore_params(ParamRefs& params,
                    const std::vector<std::pair<std::string, Matrix>>& snap) {
  if (snap.size() != params.size())
    throw std::invalid_argument("restore_params: size mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (snap[i].first != params[i].name)
      throw std::invalid_argument("restore_params: name mismatch at " +
                                  params[i].name);
    params[i].map() = snap[i].second;
  }
}

}  // namespace intentrec
