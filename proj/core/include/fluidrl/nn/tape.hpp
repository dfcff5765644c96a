#pragma once

#include <functional>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/nn/tensor.hpp"

namespace fluidrl {

struct Var {
  int id = -1;
};

// Reverse-mode autodiff over a per-update graph. Single threaded; backward
// replays node closures in strict reverse creation order so gradient
// accumulation is bit-reproducible.
class Tape {
 public:
  Var value(Tensor t);

  const Tensor& val(Var v) const { return nodes_[v.id].val; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

  Var dense(Var x, Var w, Var b);
  Var conv2d(Var x, Var k, Var b);
  Var relu(Var x);
  Var layernorm(Var x, Var gain, Var bias);
  Var dropout(Var x, double p, Rng& rng);
  Var concat_cols(Var a, Var b);
  Var reshape(Var x, std::vector<int> shape);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double s);
  Var exp_(Var x);
  Var clamp(Var x, double lo, double hi);
  Var min2(Var a, Var b);
  Var gather_cols(Var x, const std::vector<int>& idx);
  Var segment_sum(Var x, const std::vector<int>& groups, int n_groups);
  Var row_sum(Var x);
  Var mean_all(Var x);
  Var masked_mean(Var x, const std::vector<double>& mask);
  Var log_softmax(Var x);
  Var dueling(Var v, Var a);

  void backward(Var loss);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(int)> back;
  };

  Var push(Tensor v, std::function<void(int)> back = nullptr);
  Tensor& g(int id) { return nodes_[id].grad; }
  const Tensor& v(int id) const { return nodes_[id].val; }

  std::vector<Node> nodes_;
};

}  // namespace fluidrl
