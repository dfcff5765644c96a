#pragma once

#include <string>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/nn/params.hpp"
#include "fluidrl/nn/tape.hpp"

namespace fluidrl {

enum class Head { kDuelingQ, kPolicyValue, kPolicy, kValue };

// Declarative net: optional 3x3 VALID conv stack on a plane-major window,
// flat tail features concatenated after flattening, relu trunk with
// optional layernorm and dropout, then one of three heads.
struct NetworkSpec {
  int in_c = 0, in_h = 0, in_w = 0;
  std::vector<int> conv_channels;
  int tail_dim = 0;
  std::vector<int> trunk;
  bool layernorm = false;
  double dropout = 0.0;
  Head head = Head::kDuelingQ;
  int actions = 0;
  int head_hidden = 0;
  bool orthogonal_heads = false;

  bool has_conv() const { return !conv_channels.empty(); }
  int spatial_size() const { return in_c * in_h * in_w; }
  int input_size() const { return spatial_size() + tail_dim; }
  int conv_out_size() const;

  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
};

// Adds this network's tensors to the set under prefix ("q.", "a3." ...).
void init_params(const NetworkSpec& spec, ParameterSet& set,
                 const std::string& prefix, Rng& rng);

struct NetOutput {
  Var out;    // [B, actions] for q/policy heads, [B] for value
  Var value;  // [B], policy head only
};

// x is a flat [B, input_size] batch; the spatial prefix is reshaped for the
// conv stack. dropout_rng may be null when train is false or dropout is 0.
NetOutput net_forward(Tape& tape, const NetworkSpec& spec,
                      const BoundParams& params, const std::string& prefix,
                      const Tensor& x, bool train, Rng* dropout_rng);

// Greedy forward pass without a tape, for action selection. Returns the
// head output row-major [B, actions] ([B] for value heads).
Tensor net_eval(const NetworkSpec& spec, const ParameterSet& set,
                const std::string& prefix, const Tensor& x);

struct EvalOutput {
  Tensor out;
  Tensor value;  // policy_value heads only, empty otherwise
};

// net_eval variant that also surfaces the value output of a two-headed net.
EvalOutput net_eval_full(const NetworkSpec& spec, const ParameterSet& set,
                         const std::string& prefix, const Tensor& x);

}  // namespace fluidrl
