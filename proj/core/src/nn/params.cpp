#include "fluidrl/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fluidrl {

Tensor& ParameterSet::add(const std::string& name, Tensor init) {
  if (has(name)) throw std::runtime_error("params: duplicate name " + name);
  index_[name] = static_cast<int>(values_.size());
  names_.push_back(name);
  values_.push_back(std::move(init));
  return values_.back();
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::runtime_error("params: no tensor " + name);
  return values_[it->second];
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::runtime_error("params: no tensor " + name);
  return values_[it->second];
}

long long ParameterSet::total_params() const {
  long long n = 0;
  for (const Tensor& t : values_) n += t.numel();
  return n;
}

Var BoundParams::var(const std::string& name) const {
  return vars[set->index_of(name)];
}

BoundParams bind(Tape& tape, ParameterSet& set) {
  BoundParams out;
  out.set = &set;
  out.vars.reserve(set.size());
  for (int i = 0; i < set.size(); ++i) out.vars.push_back(tape.value(set.tensor(i)));
  return out;
}

std::vector<Tensor> collect_grads(const Tape& tape, const BoundParams& bound) {
  std::vector<Tensor> grads;
  grads.reserve(bound.vars.size());
  for (Var v : bound.vars) grads.push_back(tape.grad(v));
  return grads;
}

void he_normal(Tensor& w, int fan_in, Rng& rng) {
  double std = std::sqrt(2.0 / fan_in);
  for (double& e : w.data) e = rng.normal() * std;
}

void orthogonal(Tensor& w, double gain, Rng& rng) {
  if (w.ndim() != 2) throw std::runtime_error("orthogonal: want 2d tensor");
  int r = w.dim(0), c = w.dim(1);
  bool wide = c > r;
  int n = std::min(r, c);  // vector count
  int d = std::max(r, c);  // vector length
  // Gram-Schmidt on gaussian vectors.
  std::vector<std::vector<double>> q(n, std::vector<double>(d));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) q[i][j] = rng.normal();
    for (int k = 0; k < i; ++k) {
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += q[i][j] * q[k][j];
      for (int j = 0; j < d; ++j) q[i][j] -= dot * q[k][j];
    }
    double norm = 0.0;
    for (int j = 0; j < d; ++j) norm += q[i][j] * q[i][j];
    norm = std::sqrt(norm);
    if (norm < 1e-12) throw std::runtime_error("orthogonal: degenerate draw");
    for (int j = 0; j < d; ++j) q[i][j] /= norm;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) q[i][j] *= gain;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      w.at(i, j) = wide ? q[i][j] : q[j][i];
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& t : grads)
    for (double e : t.data) sq += e * e;
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (Tensor& t : grads)
      for (double& e : t.data) e *= s;
  }
  return norm;
}

Adam::Adam(const ParameterSet& set, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(set.size());
  v_.reserve(set.size());
  for (int i = 0; i < set.size(); ++i) {
    m_.emplace_back(set.tensor(i).shape);
    v_.emplace_back(set.tensor(i).shape);
  }
}

void Adam::step(ParameterSet& set, const std::vector<Tensor>& grads, double lr) {
  if (static_cast<int>(grads.size()) != set.size())
    throw std::runtime_error("adam: gradient count mismatch");
  steps_ += 1;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (int i = 0; i < set.size(); ++i) {
    Tensor& w = set.tensor(i);
    const Tensor& gt = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < w.data.size(); ++j) {
      double gj = gt.data[j];
      m.data[j] = beta1_ * m.data[j] + (1.0 - beta1_) * gj;
      v.data[j] = beta2_ * v.data[j] + (1.0 - beta2_) * gj * gj;
      double mh = m.data[j] / bc1;
      double vh = v.data[j] / bc2;
      w.data[j] -= lr * mh / (std::sqrt(vh) + eps_);
    }
  }
}

namespace {
constexpr char kMagic[8] = {'F', 'L', 'R', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& set,
                     const std::map<std::string, std::string>& meta) {
  nlohmann::json header;
  header["meta"] = meta;
  header["dtype"] = "f64le";
  nlohmann::json tensors = nlohmann::json::array();
  for (int i = 0; i < set.size(); ++i) {
    nlohmann::json t;
    t["name"] = set.name(i);
    t["shape"] = set.tensor(i).shape;
    tensors.push_back(std::move(t));
  }
  header["tensors"] = std::move(tensors);
  std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kMagic, 8);
  std::uint32_t ver = kVersion, reserved = 0;
  out.write(reinterpret_cast<const char*>(&ver), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (int i = 0; i < set.size(); ++i) {
    const Tensor& t = set.tensor(i);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed " + path);
}

ParameterSet load_checkpoint(const std::string& path,
                             std::map<std::string, std::string>* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t ver = 0, reserved = 0;
  in.read(reinterpret_cast<char*>(&ver), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (ver != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  nlohmann::json header = nlohmann::json::parse(hs);
  if (meta) {
    meta->clear();
    for (auto& [k, v] : header.at("meta").items()) (*meta)[k] = v.get<std::string>();
  }
  ParameterSet set;
  for (const auto& t : header.at("tensors")) {
    std::vector<int> shape = t.at("shape").get<std::vector<int>>();
    Tensor tensor(shape);
    in.read(reinterpret_cast<char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload");
    set.add(t.at("name").get<std::string>(), std::move(tensor));
  }
  return set;
}

}  // namespace fluidrl
