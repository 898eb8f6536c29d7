#pragma once

#include "msm/ad/bind.hpp"
#include "msm/ad/ops.hpp"
#include "msm/ad/optim.hpp"

#include <string>

namespace msm::nets {

using ad::Bound;
using ad::ParamSet;
using ad::Var;

inline constexpr double kLeakySlope = 0.1;

template <typename S>
struct Conv {
  int weight = -1, bias = -1;
  int in = 0, out = 0, kernel = 3, stride = 1;

  static Conv make(ParamSet<S>& ps, const std::string& name, int in, int out, int kernel, int stride, Rng& rng,
                   double init_gain = std::sqrt(2.0)) {
    Conv c;
    c.in = in;
    c.out = out;
    c.kernel = kernel;
    c.stride = stride;
    c.weight = ps.add(name + ".weight", ad::kaiming_uniform<S>(out, in * kernel * kernel, in * kernel * kernel, rng,
                                                               init_gain));
    c.bias = ps.add(name + ".bias", ad::Matrix<S>::Zero(out, 1));
    return c;
  }

  Var<S> operator()(Bound<S>& b, Var<S> x) const { return ad::conv2d(x, b[weight], b[bias], kernel, stride, kernel / 2); }
};

template <typename S>
struct Linear {
  int weight = -1, bias = -1;  // bias < 0: no bias term
  int in = 0, out = 0;

  static Linear make(ParamSet<S>& ps, const std::string& name, int in, int out, Rng& rng, bool with_bias = true,
                     double stddev = -1.0) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = ps.add(name + ".weight", stddev > 0 ? ad::normal_init<S>(in, out, stddev, rng)
                                                   : ad::kaiming_uniform<S>(in, out, in, rng, 1.0));
    if (with_bias) l.bias = ps.add(name + ".bias", ad::Matrix<S>::Zero(1, out));
    return l;
  }

  Var<S> operator()(Bound<S>& b, Var<S> x) const {
    return bias >= 0 ? ad::linear(x, b[weight], b[bias]) : ad::linear(x, b[weight]);
  }
};

template <typename S>
struct LayerNorm {
  int gain = -1, bias = -1;

  static LayerNorm make(ParamSet<S>& ps, const std::string& name, int dim) {
    LayerNorm n;
    n.gain = ps.add(name + ".gain", ad::Matrix<S>::Ones(1, dim));
    n.bias = ps.add(name + ".bias", ad::Matrix<S>::Zero(1, dim));
    return n;
  }

  Var<S> operator()(Bound<S>& b, Var<S> x) const { return ad::layer_norm_rows(x, b[gain], b[bias]); }
};

template <typename S>
Var<S> lrelu(Var<S> x) {
  return ad::leaky_relu(x, S(kLeakySlope));
}

/// Image tensor (3, H*W) as a tape constant with spatial metadata.
template <typename S>
Var<S> image_input(ad::Tape<S>& tape, const ad::Matrix<S>& pixels, int height, int width) {
  return tape.constant(pixels, height, width);
}

}  // namespace msm::nets
