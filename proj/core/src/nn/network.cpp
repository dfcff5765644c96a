#include "fluidrl/nn/network.hpp"

#include <stdexcept>

#include <json.hpp>

namespace fluidrl {

int NetworkSpec::conv_out_size() const {
  if (!has_conv()) return 0;
  int h = in_h, w = in_w;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    h -= 2;
    w -= 2;
  }
  if (h <= 0 || w <= 0) throw std::runtime_error("network: conv shrinks to nothing");
  return h * w * conv_channels.back();
}


std::string NetworkSpec::to_json() const {
  nlohmann::json j;
  j["in_c"] = in_c;
  j["in_h"] = in_h;
  j["in_w"] = in_w;
  j["conv_channels"] = conv_channels;
  j["tail_dim"] = tail_dim;
  j["trunk"] = trunk;
  j["layernorm"] = layernorm;
  j["dropout"] = dropout;
  j["head"] = head == Head::kDuelingQ      ? "dueling_q"
              : head == Head::kPolicyValue ? "policy_value"
              : head == Head::kPolicy      ? "policy"
                                           : "value";
  j["actions"] = actions;
  j["head_hidden"] = head_hidden;
  j["orthogonal_heads"] = orthogonal_heads;
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NetworkSpec s;
  s.in_c = j.at("in_c").get<int>();
  s.in_h = j.at("in_h").get<int>();
  s.in_w = j.at("in_w").get<int>();
  s.conv_channels = j.at("conv_channels").get<std::vector<int>>();
  s.tail_dim = j.at("tail_dim").get<int>();
  s.trunk = j.at("trunk").get<std::vector<int>>();
  s.layernorm = j.at("layernorm").get<bool>();
  s.dropout = j.at("dropout").get<double>();
  std::string h = j.at("head").get<std::string>();
  s.head = h == "dueling_q"      ? Head::kDuelingQ
           : h == "policy_value" ? Head::kPolicyValue
           : h == "policy"       ? Head::kPolicy
                                 : Head::kValue;
  s.actions = j.at("actions").get<int>();
  s.head_hidden = j.at("head_hidden").get<int>();
  s.orthogonal_heads = j.at("orthogonal_heads").get<bool>();
  return s;
}

namespace {

Tensor dense_w(int in, int out, Rng& rng) {
  Tensor w({in, out});
  he_normal(w, in, rng);
  return w;
}

Tensor dense_w_orth(int in, int out, double gain, Rng& rng) {
  Tensor w({in, out});
  orthogonal(w, gain, rng);
  return w;
}

}  // namespace

void init_params(const NetworkSpec& spec, ParameterSet& set,
                 const std::string& prefix, Rng& rng) {
  int feat = 0;
  if (spec.has_conv()) {
    int c = spec.in_c;
    for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
      int o = spec.conv_channels[i];
      Tensor k({o, c, 3, 3});
      he_normal(k, c * 9, rng);
      set.add(prefix + "conv" + std::to_string(i + 1) + ".w", std::move(k));
      set.add(prefix + "conv" + std::to_string(i + 1) + ".b", Tensor({o}));
      c = o;
    }
    feat = spec.conv_out_size() + spec.tail_dim;
  } else {
    feat = spec.input_size();
  }

  int d = feat;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    int o = spec.trunk[i];
    std::string nm = prefix + "trunk" + std::to_string(i + 1);
    set.add(nm + ".w", dense_w(d, o, rng));
    set.add(nm + ".b", Tensor({o}));
    if (spec.layernorm) {
      Tensor gain({o});
      for (double& e : gain.data) e = 1.0;
      set.add(nm + ".ln.g", std::move(gain));
      set.add(nm + ".ln.b", Tensor({o}));
    }
    d = o;
  }

  auto add_head = [&](const std::string& nm, int out, double orth_gain) {
    int hin = d;
    if (spec.head_hidden > 0) {
      set.add(prefix + nm + "_h.w", dense_w(d, spec.head_hidden, rng));
      set.add(prefix + nm + "_h.b", Tensor({spec.head_hidden}));
      hin = spec.head_hidden;
    }
    if (spec.orthogonal_heads)
      set.add(prefix + nm + ".w", dense_w_orth(hin, out, orth_gain, rng));
    else
      set.add(prefix + nm + ".w", dense_w(hin, out, rng));
    set.add(prefix + nm + ".b", Tensor({out}));
  };

  switch (spec.head) {
    case Head::kDuelingQ:
      add_head("value", 1, 1.0);
      add_head("adv", spec.actions, 1.0);
      break;
    case Head::kPolicyValue:
      add_head("actor", spec.actions, 0.01);
      add_head("critic", 1, 1.0);
      break;
    case Head::kPolicy:
      add_head("actor", spec.actions, 0.01);
      break;
    case Head::kValue:
      add_head("value", 1, 1.0);
      break;
  }
}

NetOutput net_forward(Tape& tape, const NetworkSpec& spec,
                      const BoundParams& params, const std::string& prefix,
                      const Tensor& x, bool train, Rng* dropout_rng) {
  if (x.cols() != spec.input_size())
    throw std::runtime_error("network: input width " + std::to_string(x.cols()) +
                             ", want " + std::to_string(spec.input_size()));
  int B = x.rows();

  Var feat;
  if (spec.has_conv()) {
    int sp = spec.spatial_size();
    Tensor spatial({B, spec.in_c, spec.in_h, spec.in_w});
    Tensor tail_t({B, std::max(spec.tail_dim, 1)});
    for (int r = 0; r < B; ++r) {
      const double* row = x.data.data() + static_cast<std::size_t>(r) * x.cols();
      std::copy(row, row + sp, spatial.data.begin() + static_cast<std::size_t>(r) * sp);
      for (int j = 0; j < spec.tail_dim; ++j) tail_t.at(r, j) = row[sp + j];
    }
    Var h = tape.value(std::move(spatial));
    for (std::size_t i = 0; i < spec.conv_channels.size(); ++i) {
      std::string nm = prefix + "conv" + std::to_string(i + 1);
      h = tape.relu(tape.conv2d(h, params.var(nm + ".w"), params.var(nm + ".b")));
    }
    h = tape.reshape(h, {B, spec.conv_out_size()});
    if (spec.tail_dim > 0)
      feat = tape.concat_cols(h, tape.value(std::move(tail_t)));
    else
      feat = h;
  } else {
    feat = tape.value(x);
  }

  Var h = feat;
  for (std::size_t i = 0; i < spec.trunk.size(); ++i) {
    std::string nm = prefix + "trunk" + std::to_string(i + 1);
    h = tape.relu(tape.dense(h, params.var(nm + ".w"), params.var(nm + ".b")));
    if (spec.layernorm)
      h = tape.layernorm(h, params.var(nm + ".ln.g"), params.var(nm + ".ln.b"));
    if (train && spec.dropout > 0.0) {
      if (!dropout_rng) throw std::runtime_error("network: dropout needs rng");
      h = tape.dropout(h, spec.dropout, *dropout_rng);
    }
  }

  auto head_out = [&](const std::string& nm, Var in) {
    Var hh = in;
    if (spec.head_hidden > 0)
      hh = tape.relu(
          tape.dense(hh, params.var(prefix + nm + "_h.w"), params.var(prefix + nm + "_h.b")));
    return tape.dense(hh, params.var(prefix + nm + ".w"), params.var(prefix + nm + ".b"));
  };

  NetOutput out;
  switch (spec.head) {
    case Head::kDuelingQ: {
      Var v = head_out("value", h);
      Var a = head_out("adv", h);
      out.out = tape.dueling(v, a);
      break;
    }
    case Head::kPolicyValue: {
      out.out = head_out("actor", h);
      out.value = tape.reshape(head_out("critic", h), {B});
      break;
    }
    case Head::kPolicy:
      out.out = head_out("actor", h);
      break;
    case Head::kValue:
      out.out = tape.reshape(head_out("value", h), {B});
      break;
  }
  return out;
}

Tensor net_eval(const NetworkSpec& spec, const ParameterSet& set,
                const std::string& prefix, const Tensor& x) {
  Tape tape;
  BoundParams bound = bind(tape, const_cast<ParameterSet&>(set));
  NetOutput out = net_forward(tape, spec, bound, prefix, x, false, nullptr);
  return tape.val(out.out);
}

EvalOutput net_eval_full(const NetworkSpec& spec, const ParameterSet& set,
                         const std::string& prefix, const Tensor& x) {
  Tape tape;
  BoundParams bound = bind(tape, const_cast<ParameterSet&>(set));
  NetOutput out = net_forward(tape, spec, bound, prefix, x, false, nullptr);
  EvalOutput r;
  r.out = tape.val(out.out);
  if (out.value.id >= 0) r.value = tape.val(out.value);
  return r;
}

}  // namespace fluidrl
