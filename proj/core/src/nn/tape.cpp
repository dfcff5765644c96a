#include "fluidrl/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluidrl {

namespace {
constexpr double kLnEps = 1e-5;
}

Var Tape::push(Tensor v, std::function<void(int)> back) {
  Node n;
  n.grad = Tensor(v.shape);
  n.val = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::value(Tensor t) { return push(std::move(t)); }

Var Tape::dense(Var x, Var w, Var b) {
  const Tensor& xv = v(x.id);
  const Tensor& wv = v(w.id);
  const Tensor& bv = v(b.id);
  int B = xv.rows(), I = xv.cols(), O = wv.dim(1);
  if (wv.dim(0) != I || bv.numel() != O)
    throw std::runtime_error("dense: shape mismatch " + xv.shape_str() + " x " +
                             wv.shape_str());
  Tensor out({B, O});
  for (int r = 0; r < B; ++r)
    for (int i = 0; i < I; ++i) {
      double xi = xv.at(r, i);
      if (xi == 0.0) continue;
      const double* wrow = wv.data.data() + static_cast<std::size_t>(i) * O;
      double* orow = out.data.data() + static_cast<std::size_t>(r) * O;
      for (int o = 0; o < O; ++o) orow[o] += xi * wrow[o];
    }
  for (int r = 0; r < B; ++r)
    for (int o = 0; o < O; ++o) out.at(r, o) += bv.data[o];

  return push(std::move(out), [this, x, w, b, B, I, O](int self) {
    const Tensor& go = g(self);
    const Tensor& xv = v(x.id);
    const Tensor& wv = v(w.id);
    Tensor& gx = g(x.id);
    Tensor& gw = g(w.id);
    Tensor& gb = g(b.id);
    for (int r = 0; r < B; ++r) {
      const double* grow = go.data.data() + static_cast<std::size_t>(r) * O;
      for (int i = 0; i < I; ++i) {
        const double* wrow = wv.data.data() + static_cast<std::size_t>(i) * O;
        double acc = 0.0;
        for (int o = 0; o < O; ++o) acc += grow[o] * wrow[o];
        gx.at(r, i) += acc;
      }
      for (int i = 0; i < I; ++i) {
        double xi = xv.at(r, i);
        if (xi == 0.0) continue;
        double* gwrow = gw.data.data() + static_cast<std::size_t>(i) * O;
        for (int o = 0; o < O; ++o) gwrow[o] += xi * grow[o];
      }
      for (int o = 0; o < O; ++o) gb.data[o] += grow[o];
    }
  });
}

Var Tape::conv2d(Var x, Var k, Var b) {
  const Tensor& xv = v(x.id);
  const Tensor& kv = v(k.id);
  const Tensor& bv = v(b.id);
  if (xv.ndim() != 4 || kv.ndim() != 4 || kv.dim(2) != 3 || kv.dim(3) != 3)
    throw std::runtime_error("conv2d: want x [B,C,H,W], k [O,C,3,3]");
  int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  int O = kv.dim(0);
  if (kv.dim(1) != C || bv.numel() != O || H < 3 || W < 3)
    throw std::runtime_error("conv2d: shape mismatch " + xv.shape_str() +
                             " k " + kv.shape_str());
  int OH = H - 2, OW = W - 2;
  Tensor out({B, O, OH, OW});
  auto xi = [&](int bt, int c, int r, int cc) {
    return xv.data[((static_cast<std::size_t>(bt) * C + c) * H + r) * W + cc];
  };
  for (int bt = 0; bt < B; ++bt)
    for (int o = 0; o < O; ++o)
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) {
          double s = bv.data[o];
          for (int c = 0; c < C; ++c) {
            const double* kr =
                kv.data.data() + (static_cast<std::size_t>(o) * C + c) * 9;
            for (int kh = 0; kh < 3; ++kh)
              for (int kw = 0; kw < 3; ++kw)
                s += xi(bt, c, oh + kh, ow + kw) * kr[kh * 3 + kw];
          }
          out.data[((static_cast<std::size_t>(bt) * O + o) * OH + oh) * OW +
                   ow] = s;
        }

  return push(std::move(out), [this, x, k, b, B, C, H, W, O, OH, OW](int self) {
    const Tensor& go = g(self);
    const Tensor& xv = v(x.id);
    const Tensor& kv = v(k.id);
    Tensor& gx = g(x.id);
    Tensor& gk = g(k.id);
    Tensor& gb = g(b.id);
    for (int bt = 0; bt < B; ++bt)
      for (int o = 0; o < O; ++o)
        for (int oh = 0; oh < OH; ++oh)
          for (int ow = 0; ow < OW; ++ow) {
            double gg =
                go.data[((static_cast<std::size_t>(bt) * O + o) * OH + oh) *
                            OW +
                        ow];
            if (gg == 0.0) continue;
            gb.data[o] += gg;
            for (int c = 0; c < C; ++c) {
              const double* kr =
                  kv.data.data() + (static_cast<std::size_t>(o) * C + c) * 9;
              double* gkr =
                  gk.data.data() + (static_cast<std::size_t>(o) * C + c) * 9;
              for (int kh = 0; kh < 3; ++kh)
                for (int kw = 0; kw < 3; ++kw) {
                  std::size_t xo =
                      ((static_cast<std::size_t>(bt) * C + c) * H + oh + kh) *
                          W +
                      ow + kw;
                  gx.data[xo] += gg * kr[kh * 3 + kw];
                  gkr[kh * 3 + kw] += gg * xv.data[xo];
                }
            }
          }
  });
}

Var Tape::relu(Var x) {
  Tensor out = v(x.id);
  for (double& e : out.data) e = e > 0.0 ? e : 0.0;
  return push(std::move(out), [this, x](int self) {
    const Tensor& go = g(self);
    const Tensor& xv = v(x.id);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      if (xv.data[i] > 0.0) gx.data[i] += go.data[i];
  });
}

Var Tape::layernorm(Var x, Var gain, Var bias) {
  const Tensor& xv = v(x.id);
  const Tensor& gv = v(gain.id);
  const Tensor& bv = v(bias.id);
  int D = xv.shape.back();
  int R = static_cast<int>(xv.numel() / D);
  if (gv.numel() != D || bv.numel() != D)
    throw std::runtime_error("layernorm: gain/bias must match last dim");
  Tensor out(xv.shape);
  for (int r = 0; r < R; ++r) {
    const double* xr = xv.data.data() + static_cast<std::size_t>(r) * D;
    double* orow = out.data.data() + static_cast<std::size_t>(r) * D;
    double mu = 0.0;
    for (int j = 0; j < D; ++j) mu += xr[j];
    mu /= D;
    double var = 0.0;
    for (int j = 0; j < D; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= D;
    double inv = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < D; ++j)
      orow[j] = (xr[j] - mu) * inv * gv.data[j] + bv.data[j];
  }

  return push(std::move(out), [this, x, gain, bias, R, D](int self) {
    const Tensor& go = g(self);
    const Tensor& xv = v(x.id);
    const Tensor& gv = v(gain.id);
    Tensor& gx = g(x.id);
    Tensor& gg = g(gain.id);
    Tensor& gb = g(bias.id);
    std::vector<double> xhat(D);
    for (int r = 0; r < R; ++r) {
      const double* xr = xv.data.data() + static_cast<std::size_t>(r) * D;
      const double* gr = go.data.data() + static_cast<std::size_t>(r) * D;
      double* gxr = gx.data.data() + static_cast<std::size_t>(r) * D;
      double mu = 0.0;
      for (int j = 0; j < D; ++j) mu += xr[j];
      mu /= D;
      double var = 0.0;
      for (int j = 0; j < D; ++j) var += (xr[j] - mu) * (xr[j] - mu);
      var /= D;
      double inv = 1.0 / std::sqrt(var + kLnEps);
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < D; ++j) {
        xhat[j] = (xr[j] - mu) * inv;
        double dxh = gr[j] * gv.data[j];
        m1 += dxh;
        m2 += dxh * xhat[j];
      }
      m1 /= D;
      m2 /= D;
      for (int j = 0; j < D; ++j) {
        double dxh = gr[j] * gv.data[j];
        gxr[j] += (dxh - m1 - xhat[j] * m2) * inv;
        gg.data[j] += gr[j] * xhat[j];
        gb.data[j] += gr[j];
      }
    }
  });
}

Var Tape::dropout(Var x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw std::runtime_error("dropout: p must be < 1");
  const Tensor& xv = v(x.id);
  std::vector<double> mask(xv.data.size());
  double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
  Tensor out = xv;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask[i];
  return push(std::move(out), [this, x, mask = std::move(mask)](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] += go.data[i] * mask[i];
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& av = v(a.id);
  const Tensor& bv = v(b.id);
  int B = av.rows();
  if (bv.rows() != B) throw std::runtime_error("concat_cols: row mismatch");
  int ca = av.cols(), cb = bv.cols();
  Tensor out({B, ca + cb});
  for (int r = 0; r < B; ++r) {
    for (int j = 0; j < ca; ++j) out.at(r, j) = av.at(r, j);
    for (int j = 0; j < cb; ++j) out.at(r, ca + j) = bv.at(r, j);
  }
  return push(std::move(out), [this, a, b, B, ca, cb](int self) {
    const Tensor& go = g(self);
    Tensor& ga = g(a.id);
    Tensor& gb = g(b.id);
    for (int r = 0; r < B; ++r) {
      for (int j = 0; j < ca; ++j) ga.at(r, j) += go.at(r, j);
      for (int j = 0; j < cb; ++j) gb.at(r, j) += go.at(r, ca + j);
    }
  });
}

Var Tape::reshape(Var x, std::vector<int> shape) {
  const Tensor& xv = v(x.id);
  if (Tensor::numel_of(shape) != xv.numel())
    throw std::runtime_error("reshape: numel mismatch");
  Tensor out(std::move(shape), xv.data);
  return push(std::move(out), [this, x](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] += go.data[i];
  });
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = v(a.id);
  const Tensor& bv = v(b.id);
  if (av.numel() != bv.numel()) throw std::runtime_error("add: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  return push(std::move(out), [this, a, b](int self) {
    const Tensor& go = g(self);
    Tensor& ga = g(a.id);
    Tensor& gb = g(b.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      ga.data[i] += go.data[i];
      gb.data[i] += go.data[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = v(a.id);
  const Tensor& bv = v(b.id);
  if (av.numel() != bv.numel()) throw std::runtime_error("sub: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
  return push(std::move(out), [this, a, b](int self) {
    const Tensor& go = g(self);
    Tensor& ga = g(a.id);
    Tensor& gb = g(b.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      ga.data[i] += go.data[i];
      gb.data[i] -= go.data[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor& av = v(a.id);
  const Tensor& bv = v(b.id);
  if (av.numel() != bv.numel()) throw std::runtime_error("mul: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  return push(std::move(out), [this, a, b](int self) {
    const Tensor& go = g(self);
    const Tensor& av = v(a.id);
    const Tensor& bv = v(b.id);
    Tensor& ga = g(a.id);
    Tensor& gb = g(b.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      ga.data[i] += go.data[i] * bv.data[i];
      gb.data[i] += go.data[i] * av.data[i];
    }
  });
}

Var Tape::scale(Var x, double s) {
  Tensor out = v(x.id);
  for (double& e : out.data) e *= s;
  return push(std::move(out), [this, x, s](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] += s * go.data[i];
  });
}

Var Tape::exp_(Var x) {
  Tensor out = v(x.id);
  for (double& e : out.data) e = std::exp(e);
  return push(std::move(out), [this, x](int self) {
    const Tensor& go = g(self);
    const Tensor& ov = v(self);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      gx.data[i] += go.data[i] * ov.data[i];
  });
}

Var Tape::clamp(Var x, double lo, double hi) {
  const Tensor& xv = v(x.id);
  Tensor out = xv;
  for (double& e : out.data) e = std::min(std::max(e, lo), hi);
  return push(std::move(out), [this, x, lo, hi](int self) {
    const Tensor& go = g(self);
    const Tensor& xv = v(x.id);
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < gx.data.size(); ++i)
      if (xv.data[i] > lo && xv.data[i] < hi) gx.data[i] += go.data[i];
  });
}

Var Tape::min2(Var a, Var b) {
  const Tensor& av = v(a.id);
  const Tensor& bv = v(b.id);
  if (av.numel() != bv.numel()) throw std::runtime_error("min2: shape mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = std::min(av.data[i], bv.data[i]);
  return push(std::move(out), [this, a, b](int self) {
    const Tensor& go = g(self);
    const Tensor& av = v(a.id);
    const Tensor& bv = v(b.id);
    Tensor& ga = g(a.id);
    Tensor& gb = g(b.id);
    for (std::size_t i = 0; i < go.data.size(); ++i) {
      if (av.data[i] <= bv.data[i])
        ga.data[i] += go.data[i];
      else
        gb.data[i] += go.data[i];
    }
  });
}

Var Tape::gather_cols(Var x, const std::vector<int>& idx) {
  const Tensor& xv = v(x.id);
  int B = xv.rows(), n = xv.cols();
  if (static_cast<int>(idx.size()) != B)
    throw std::runtime_error("gather_cols: index count mismatch");
  Tensor out({B});
  for (int r = 0; r < B; ++r) {
    if (idx[r] < 0 || idx[r] >= n)
      throw std::runtime_error("gather_cols: index out of range");
    out.data[r] = xv.at(r, idx[r]);
  }
  return push(std::move(out), [this, x, idx](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (std::size_t r = 0; r < idx.size(); ++r)
      gx.at(static_cast<int>(r), idx[r]) += go.data[r];
  });
}

Var Tape::segment_sum(Var x, const std::vector<int>& groups, int n_groups) {
  const Tensor& xv = v(x.id);
  if (static_cast<long long>(groups.size()) != xv.numel())
    throw std::runtime_error("segment_sum: group count mismatch");
  Tensor out({n_groups});
  for (std::size_t r = 0; r < groups.size(); ++r) {
    if (groups[r] < 0 || groups[r] >= n_groups)
      throw std::runtime_error("segment_sum: group out of range");
    out.data[groups[r]] += xv.data[r];
  }
  return push(std::move(out), [this, x, groups](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (std::size_t r = 0; r < groups.size(); ++r)
      gx.data[r] += go.data[groups[r]];
  });
}

Var Tape::row_sum(Var x) {
  const Tensor& xv = v(x.id);
  int B = xv.rows(), n = xv.cols();
  Tensor out({B});
  for (int r = 0; r < B; ++r) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += xv.at(r, j);
    out.data[r] = s;
  }
  return push(std::move(out), [this, x, B, n](int self) {
    const Tensor& go = g(self);
    Tensor& gx = g(x.id);
    for (int r = 0; r < B; ++r)
      for (int j = 0; j < n; ++j) gx.at(r, j) += go.data[r];
  });
}

Var Tape::mean_all(Var x) {
  const Tensor& xv = v(x.id);
  double s = 0.0;
  for (double e : xv.data) s += e;
  long long n = xv.numel();
  Tensor out({1});
  out.data[0] = s / n;
  return push(std::move(out), [this, x, n](int self) {
    double go = g(self).data[0] / n;
    Tensor& gx = g(x.id);
    for (double& e : gx.data) e += go;
  });
}

Var Tape::masked_mean(Var x, const std::vector<double>& mask) {
  const Tensor& xv = v(x.id);
  if (mask.size() != xv.data.size())
    throw std::runtime_error("masked_mean: mask size mismatch");
  double s = 0.0, denom = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    s += xv.data[i] * mask[i];
    denom += mask[i];
  }
  if (denom <= 0.0) throw std::runtime_error("masked_mean: empty mask");
  Tensor out({1});
  out.data[0] = s / denom;
  return push(std::move(out), [this, x, mask, denom](int self) {
    double go = g(self).data[0];
    Tensor& gx = g(x.id);
    for (std::size_t i = 0; i < mask.size(); ++i)
      gx.data[i] += go * mask[i] / denom;
  });
}

Var Tape::log_softmax(Var x) {
  const Tensor& xv = v(x.id);
  int B = xv.rows(), n = xv.cols();
  Tensor out({B, n});
  for (int r = 0; r < B; ++r) {
    double m = xv.at(r, 0);
    for (int j = 1; j < n; ++j) m = std::max(m, xv.at(r, j));
    double lse = 0.0;
    for (int j = 0; j < n; ++j) lse += std::exp(xv.at(r, j) - m);
    lse = m + std::log(lse);
    for (int j = 0; j < n; ++j) out.at(r, j) = xv.at(r, j) - lse;
  }
  return push(std::move(out), [this, x, B, n](int self) {
    const Tensor& go = g(self);
    const Tensor& ov = v(self);
    Tensor& gx = g(x.id);
    for (int r = 0; r < B; ++r) {
      double gsum = 0.0;
      for (int j = 0; j < n; ++j) gsum += go.at(r, j);
      for (int j = 0; j < n; ++j)
        gx.at(r, j) += go.at(r, j) - std::exp(ov.at(r, j)) * gsum;
    }
  });
}

Var Tape::dueling(Var value, Var adv) {
  const Tensor& vv = v(value.id);
  const Tensor& av = v(adv.id);
  int B = av.rows(), n = av.cols();
  if (vv.rows() != B || vv.cols() != 1)
    throw std::runtime_error("dueling: value must be [B,1]");
  Tensor out({B, n});
  for (int r = 0; r < B; ++r) {
    double m = 0.0;
    for (int j = 0; j < n; ++j) m += av.at(r, j);
    m /= n;
    for (int j = 0; j < n; ++j) out.at(r, j) = vv.at(r, 0) + av.at(r, j) - m;
  }
  return push(std::move(out), [this, value, adv, B, n](int self) {
    const Tensor& go = g(self);
    Tensor& gv = g(value.id);
    Tensor& ga = g(adv.id);
    for (int r = 0; r < B; ++r) {
      double gsum = 0.0;
      for (int j = 0; j < n; ++j) gsum += go.at(r, j);
      gv.at(r, 0) += gsum;
      for (int j = 0; j < n; ++j) ga.at(r, j) += go.at(r, j) - gsum / n;
    }
  });
}

void Tape::backward(Var loss) {
  if (v(loss.id).numel() != 1)
    throw std::runtime_error("backward: loss must be scalar");
  g(loss.id).data[0] = 1.0;
  for (int id = loss.id; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back(id);
}

}  // namespace fluidrl
