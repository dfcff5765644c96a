#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/nn/tape.hpp"
#include "fluidrl/nn/tensor.hpp"

namespace fluidrl {

// Named parameter tensors in insertion order. Multi-network learners keep
// everything in one set with dotted name prefixes.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor init);
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  int size() const { return static_cast<int>(values_.size()); }
  int index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::runtime_error("params: no tensor " + name);
    return it->second;
  }
  const std::string& name(int i) const { return names_[i]; }
  Tensor& tensor(int i) { return values_[i]; }
  const Tensor& tensor(int i) const { return values_[i]; }
  long long total_params() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  std::vector<Tensor> values_;
};

// Leaf bindings of a full set on a tape, aligned with set order.
struct BoundParams {
  ParameterSet* set = nullptr;
  std::vector<Var> vars;

  Var var(const std::string& name) const;
};

BoundParams bind(Tape& tape, ParameterSet& set);
std::vector<Tensor> collect_grads(const Tape& tape, const BoundParams& bound);

void he_normal(Tensor& w, int fan_in, Rng& rng);
// Orthogonal rows or columns of a 2d tensor, scaled by gain.
void orthogonal(Tensor& w, double gain, Rng& rng);

// Scales all gradients in place when the joint L2 norm exceeds max_norm.
// Returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

class Adam {
 public:
  explicit Adam(const ParameterSet& set, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step(ParameterSet& set, const std::vector<Tensor>& grads, double lr);
  long long steps() const { return steps_; }

 private:
  double beta1_, beta2_, eps_;
  long long steps_ = 0;
  std::vector<Tensor> m_, v_;
};

// Binary checkpoint: magic, version, JSON header (meta + tensor manifest),
// raw little-endian f64 payload.
void save_checkpoint(const std::string& path, const ParameterSet& set,
                     const std::map<std::string, std::string>& meta);
ParameterSet load_checkpoint(const std::string& path,
                             std::map<std::string, std::string>* meta = nullptr);

}  // namespace fluidrl
