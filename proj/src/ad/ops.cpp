#include "msm/ad/ops.hpp"

#include "msm/errors.hpp"

#include <cmath>
#include <string>

namespace msm::ad {

namespace {

template <typename S>
void require_same_shape(Var<S> a, Var<S> b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + ")");
}

template <typename S>
bool any_grad(std::initializer_list<Var<S>> vs) {
  for (auto v : vs)
    if (v.requires_grad()) return true;
  return false;
}

// (C, H*W) -> (C*k*k, Ho*Wo), row index (c*k + ky)*k + kx.
template <typename S>
Matrix<S> im2col(const Matrix<S>& x, int h, int w, int k, int stride, int pad, int ho, int wo) {
  const long c_in = x.rows();
  Matrix<S> cols = Matrix<S>::Zero(c_in * k * k, static_cast<long>(ho) * wo);
  for (long c = 0; c < c_in; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const long row = (c * k + ky) * k + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            cols(row, static_cast<long>(oy) * wo + ox) = x(c, static_cast<long>(iy) * w + ix);
          }
        }
      }
  return cols;
}

template <typename S>
void col2im_add(const Matrix<S>& cols, Matrix<S>& gx, int h, int w, int k, int stride, int pad, int ho, int wo) {
  const long c_in = gx.rows();
  for (long c = 0; c < c_in; ++c)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx) {
        const long row = (c * k + ky) * k + kx;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= w) continue;
            gx(c, static_cast<long>(iy) * w + ix) += cols(row, static_cast<long>(oy) * wo + ox);
          }
        }
      }
}

}  // namespace

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  require_same_shape(a, b, "add");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.push(a.value() + b.value(), any_grad({a, b}),
                [ia, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ia).requires_grad) t.grad(ia) += g;
                  if (t.node(ib).requires_grad) t.grad(ib) += g;
                },
                a.height(), a.width());
}

template <typename S>
Var<S> sub(Var<S> a, Var<S> b) {
  require_same_shape(a, b, "sub");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.push(a.value() - b.value(), any_grad({a, b}),
                [ia, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ia).requires_grad) t.grad(ia) += g;
                  if (t.node(ib).requires_grad) t.grad(ib) -= g;
                },
                a.height(), a.width());
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  require_same_shape(a, b, "mul");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.push(a.value().cwiseProduct(b.value()), any_grad({a, b}),
                [ia, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ia).requires_grad) t.grad(ia) += g.cwiseProduct(t.node(ib).value);
                  if (t.node(ib).requires_grad) t.grad(ib) += g.cwiseProduct(t.node(ia).value);
                },
                a.height(), a.width());
}

template <typename S>
Var<S> scale(Var<S> a, S factor) {
  Tape<S>& t = *a.tape;
  const int ia = a.id;
  return t.push(a.value() * factor, a.requires_grad(),
                [ia, factor](Tape<S>& t, int self) { t.grad(ia) += t.node(self).grad * factor; }, a.height(),
                a.width());
}

template <typename S>
Var<S> leaky_relu(Var<S> x, S slope) {
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  Matrix<S> out = x.value().unaryExpr([slope](S v) { return v > S(0) ? v : v * slope; });
  return t.push(std::move(out), x.requires_grad(),
                [ix, slope](Tape<S>& t, int self) {
                  const auto& in = t.node(ix).value;
                  t.grad(ix) += t.node(self).grad.cwiseProduct(
                      in.unaryExpr([slope](S v) { return v > S(0) ? S(1) : slope; }));
                },
                x.height(), x.width());
}

template <typename S>
Var<S> gelu(Var<S> x) {
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  constexpr S k = S(0.7978845608028654);  // sqrt(2/pi)
  constexpr S c = S(0.044715);
  Matrix<S> out = x.value().unaryExpr([](S v) { return S(0.5) * v * (S(1) + std::tanh(k * (v + c * v * v * v))); });
  return t.push(std::move(out), x.requires_grad(),
                [ix](Tape<S>& t, int self) {
                  const auto& in = t.node(ix).value;
                  Matrix<S> d = in.unaryExpr([](S v) {
                    const S u = k * (v + c * v * v * v);
                    const S th = std::tanh(u);
                    return S(0.5) * (S(1) + th) + S(0.5) * v * (S(1) - th * th) * k * (S(1) + S(3) * c * v * v);
                  });
                  t.grad(ix) += t.node(self).grad.cwiseProduct(d);
                },
                x.height(), x.width());
}

template <typename S>
Var<S> clamp(Var<S> x, S lo, S hi) {
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(x.value().cwiseMax(lo).cwiseMin(hi), x.requires_grad(),
                [ix, lo, hi](Tape<S>& t, int self) {
                  const auto& in = t.node(ix).value;
                  const auto& g = t.node(self).grad;
                  auto& gx = t.grad(ix);
                  for (long i = 0; i < in.size(); ++i)
                    if (in(i) >= lo && in(i) <= hi) gx(i) += g(i);
                },
                x.height(), x.width());
}

template <typename S>
Var<S> conv2d(Var<S> x, Var<S> weight, Var<S> bias, int kernel, int stride, int pad) {
  const int h = x.height(), w = x.width();
  if (static_cast<long>(h) * w != x.cols())
    throw DimensionMismatch("conv2d: input is not a feature map");
  if (weight.cols() != x.rows() * kernel * kernel)
    throw DimensionMismatch("conv2d: weight expects " + std::to_string(weight.cols() / (kernel * kernel)) +
                            " input channels, got " + std::to_string(x.rows()));
  if (bias.rows() != weight.rows() || bias.cols() != 1) throw DimensionMismatch("conv2d: bias shape");
  const int ho = (h + 2 * pad - kernel) / stride + 1;
  const int wo = (w + 2 * pad - kernel) / stride + 1;
  if (ho <= 0 || wo <= 0) throw DimensionMismatch("conv2d: input smaller than kernel");

  Tape<S>& t = *x.tape;
  Matrix<S> cols;
  const bool pointwise = kernel == 1 && stride == 1 && pad == 0;
  if (!pointwise) cols = im2col(x.value(), h, w, kernel, stride, pad, ho, wo);
  const Matrix<S>& src = pointwise ? x.value() : cols;
  Matrix<S> out = weight.value() * src;
  out.colwise() += bias.value().col(0);

  const int ix = x.id, iw = weight.id, ib = bias.id;
  return t.push(
      std::move(out), any_grad({x, weight, bias}),
      [ix, iw, ib, cols = std::move(cols), pointwise, h, w, kernel, stride, pad, ho, wo](Tape<S>& t, int self) {
        const auto& g = t.node(self).grad;
        const Matrix<S>& src = pointwise ? t.node(ix).value : cols;
        if (t.node(iw).requires_grad) t.grad(iw).noalias() += g * src.transpose();
        if (t.node(ib).requires_grad) t.grad(ib) += g.rowwise().sum();
        if (t.node(ix).requires_grad) {
          if (pointwise) {
            t.grad(ix).noalias() += t.node(iw).value.transpose() * g;
          } else {
            Matrix<S> gcols = t.node(iw).value.transpose() * g;
            col2im_add(gcols, t.grad(ix), h, w, kernel, stride, pad, ho, wo);
          }
        }
      },
      ho, wo);
}

template <typename S>
Var<S> avg_pool(Var<S> x, int factor) {
  const int h = x.height(), w = x.width();
  if (factor < 1 || h % factor != 0 || w % factor != 0)
    throw DimensionMismatch("avg_pool: spatial size not divisible by factor");
  if (factor == 1) return x;
  const int ho = h / factor, wo = w / factor;
  const S inv = S(1) / S(factor * factor);
  const long c = x.rows();
  Matrix<S> out = Matrix<S>::Zero(c, static_cast<long>(ho) * wo);
  const auto& in = x.value();
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) out.col((y / factor) * wo + xx / factor) += in.col(static_cast<long>(y) * w + xx);
  out *= inv;
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, h, w, wo, factor, inv](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  auto& gx = t.grad(ix);
                  for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx)
                      gx.col(static_cast<long>(y) * w + xx) += g.col((y / factor) * wo + xx / factor) * inv;
                },
                ho, wo);
}

template <typename S>
Var<S> upsample_nearest(Var<S> x, int factor) {
  if (factor == 1) return x;
  const int h = x.height(), w = x.width();
  const int ho = h * factor, wo = w * factor;
  const auto& in = x.value();
  Matrix<S> out(in.rows(), static_cast<long>(ho) * wo);
  for (int y = 0; y < ho; ++y)
    for (int xx = 0; xx < wo; ++xx) out.col(static_cast<long>(y) * wo + xx) = in.col((y / factor) * w + xx / factor);
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, w, ho, wo, factor](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  auto& gx = t.grad(ix);
                  for (int y = 0; y < ho; ++y)
                    for (int xx = 0; xx < wo; ++xx)
                      gx.col((y / factor) * w + xx / factor) += g.col(static_cast<long>(y) * wo + xx);
                },
                ho, wo);
}

template <typename S>
Var<S> global_avg_pool(Var<S> x) {
  const long n = x.cols();
  Matrix<S> out = (x.value().rowwise().sum() / S(n)).transpose();
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, n](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;  // (1, C)
                  t.grad(ix).colwise() += g.row(0).transpose() / S(n);
                },
                0, 0);
}

template <typename S>
Var<S> add_channel_bias(Var<S> x, Var<S> bias_row) {
  if (bias_row.rows() != 1 || bias_row.cols() != x.rows())
    throw DimensionMismatch("add_channel_bias: expected a (1, " + std::to_string(x.rows()) + ") row");
  Matrix<S> out = x.value();
  out.colwise() += bias_row.value().row(0).transpose();
  Tape<S>& t = *x.tape;
  const int ix = x.id, ib = bias_row.id;
  return t.push(std::move(out), any_grad({x, bias_row}),
                [ix, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ix).requires_grad) t.grad(ix) += g;
                  if (t.node(ib).requires_grad) t.grad(ib) += g.rowwise().sum().transpose();
                },
                x.height(), x.width());
}

template <typename S>
Var<S> scale_channels(Var<S> x, Var<S> gain_row) {
  if (gain_row.rows() != 1 || gain_row.cols() != x.rows())
    throw DimensionMismatch("scale_channels: expected a (1, " + std::to_string(x.rows()) + ") row");
  Matrix<S> out = gain_row.value().row(0).transpose().asDiagonal() * x.value();
  Tape<S>& t = *x.tape;
  const int ix = x.id, ig = gain_row.id;
  return t.push(std::move(out), any_grad({x, gain_row}),
                [ix, ig](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ix).requires_grad)
                    t.grad(ix) += t.node(ig).value.row(0).transpose().asDiagonal() * g;
                  if (t.node(ig).requires_grad)
                    t.grad(ig) += g.cwiseProduct(t.node(ix).value).rowwise().sum().transpose();
                },
                x.height(), x.width());
}

template <typename S>
Var<S> total_variation(Var<S> x) {
  const int h = x.height(), w = x.width();
  if (h < 2 || w < 2) throw DimensionMismatch("total_variation: needs at least 2x2");
  const auto& v = x.value();
  const long c = v.rows();
  const S n_h = S(c * h * (w - 1)), n_v = S(c * (h - 1) * w);
  S acc = 0;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      const long p = static_cast<long>(y) * w + xx;
      if (xx + 1 < w) acc += (v.col(p + 1) - v.col(p)).squaredNorm() / n_h;
      if (y + 1 < h) acc += (v.col(p + w) - v.col(p)).squaredNorm() / n_v;
    }
  Matrix<S> out(1, 1);
  out(0, 0) = acc;
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, h, w, n_h, n_v](Tape<S>& t, int self) {
                  const S g = t.node(self).grad(0, 0);
                  const auto& v = t.node(ix).value;
                  auto& gx = t.grad(ix);
                  for (int y = 0; y < h; ++y)
                    for (int xx = 0; xx < w; ++xx) {
                      const long p = static_cast<long>(y) * w + xx;
                      if (xx + 1 < w) {
                        auto d = (v.col(p + 1) - v.col(p)) * (S(2) * g / n_h);
                        gx.col(p + 1) += d;
                        gx.col(p) -= d;
                      }
                      if (y + 1 < h) {
                        auto d = (v.col(p + w) - v.col(p)) * (S(2) * g / n_v);
                        gx.col(p + w) += d;
                        gx.col(p) -= d;
                      }
                    }
                },
                1, 1);
}

template <typename S>
Var<S> matmul(Var<S> a, Var<S> b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimensions differ");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.push(a.value() * b.value(), any_grad({a, b}),
                [ia, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ia).requires_grad) t.grad(ia).noalias() += g * t.node(ib).value.transpose();
                  if (t.node(ib).requires_grad) t.grad(ib).noalias() += t.node(ia).value.transpose() * g;
                },
                0, 0);
}

template <typename S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  if (a.cols() != b.cols()) throw DimensionMismatch("matmul_nt: inner dimensions differ");
  Tape<S>& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.push(a.value() * b.value().transpose(), any_grad({a, b}),
                [ia, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ia).requires_grad) t.grad(ia).noalias() += g * t.node(ib).value;
                  if (t.node(ib).requires_grad) t.grad(ib).noalias() += g.transpose() * t.node(ia).value;
                },
                0, 0);
}

template <typename S>
Var<S> linear(Var<S> x, Var<S> w, Var<S> b) {
  if (x.cols() != w.rows()) throw DimensionMismatch("linear: input width " + std::to_string(x.cols()) +
                                                    " vs weight rows " + std::to_string(w.rows()));
  if (b.rows() != 1 || b.cols() != w.cols()) throw DimensionMismatch("linear: bias shape");
  Matrix<S> out = x.value() * w.value();
  out.rowwise() += b.value().row(0);
  Tape<S>& t = *x.tape;
  const int ix = x.id, iw = w.id, ib = b.id;
  return t.push(std::move(out), any_grad({x, w, b}),
                [ix, iw, ib](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ix).requires_grad) t.grad(ix).noalias() += g * t.node(iw).value.transpose();
                  if (t.node(iw).requires_grad) t.grad(iw).noalias() += t.node(ix).value.transpose() * g;
                  if (t.node(ib).requires_grad) t.grad(ib) += g.colwise().sum();
                },
                0, 0);
}

template <typename S>
Var<S> linear(Var<S> x, Var<S> w) {
  return matmul(x, w);
}

template <typename S>
Var<S> softmax_rows(Var<S> x) {
  Matrix<S> out = x.value();
  for (long r = 0; r < out.rows(); ++r) {
    const S m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix](Tape<S>& t, int self) {
                  const auto& y = t.node(self).value;
                  const auto& g = t.node(self).grad;
                  auto& gx = t.grad(ix);
                  for (long r = 0; r < y.rows(); ++r) {
                    const S dot = g.row(r).dot(y.row(r));
                    gx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
                  }
                },
                0, 0);
}

template <typename S>
Var<S> layer_norm_rows(Var<S> x, Var<S> gain, Var<S> bias, S eps) {
  const long n = x.rows(), d = x.cols();
  if (gain.cols() != d || bias.cols() != d) throw DimensionMismatch("layer_norm_rows: gain/bias width");
  const auto& in = x.value();
  Matrix<S> xhat(n, d);
  Eigen::Matrix<S, Eigen::Dynamic, 1> inv_std(n);
  for (long r = 0; r < n; ++r) {
    const S mu = in.row(r).mean();
    const S var = (in.row(r).array() - mu).square().mean();
    inv_std(r) = S(1) / std::sqrt(var + eps);
    xhat.row(r) = (in.row(r).array() - mu) * inv_std(r);
  }
  Matrix<S> out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  Tape<S>& t = *x.tape;
  const int ix = x.id, ig = gain.id, ib = bias.id;
  return t.push(std::move(out), any_grad({x, gain, bias}),
                [ix, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  if (t.node(ig).requires_grad) t.grad(ig) += g.cwiseProduct(xhat).colwise().sum();
                  if (t.node(ib).requires_grad) t.grad(ib) += g.colwise().sum();
                  if (t.node(ix).requires_grad) {
                    const auto& gamma = t.node(ig).value;
                    auto& gx = t.grad(ix);
                    const S d = S(xhat.cols());
                    for (long r = 0; r < xhat.rows(); ++r) {
                      Eigen::Matrix<S, 1, Eigen::Dynamic> gh = g.row(r).cwiseProduct(gamma.row(0));
                      const S m1 = gh.mean();
                      const S m2 = gh.dot(xhat.row(r)) / d;
                      gx.row(r).array() += inv_std(r) * (gh.array() - m1 - xhat.row(r).array() * m2);
                    }
                  }
                },
                0, 0);
}

template <typename S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw InvalidInput("concat_rows: nothing to concatenate");
  const long cols = parts.front().cols();
  long rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionMismatch("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix<S> out(rows, cols);
  std::vector<int> ids;
  std::vector<long> offsets;
  long r = 0;
  bool needs = false;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(r);
    r += p.rows();
    needs = needs || p.requires_grad();
  }
  Tape<S>& t = *parts.front().tape;
  return t.push(std::move(out), needs,
                [ids, offsets](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (!t.node(ids[i]).requires_grad) continue;
                    auto& gi = t.grad(ids[i]);
                    gi += g.middleRows(offsets[i], gi.rows());
                  }
                },
                parts.front().height(), parts.front().width());
}

template <typename S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw InvalidInput("concat_cols: nothing to concatenate");
  const long rows = parts.front().rows();
  long cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DimensionMismatch("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<S> out(rows, cols);
  std::vector<int> ids;
  std::vector<long> offsets;
  long c = 0;
  bool needs = false;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    ids.push_back(p.id);
    offsets.push_back(c);
    c += p.cols();
    needs = needs || p.requires_grad();
  }
  Tape<S>& t = *parts.front().tape;
  return t.push(std::move(out), needs,
                [ids, offsets](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (!t.node(ids[i]).requires_grad) continue;
                    auto& gi = t.grad(ids[i]);
                    gi += g.middleCols(offsets[i], gi.cols());
                  }
                },
                0, 0);
}

template <typename S>
Var<S> slice_rows(Var<S> x, long start, long count) {
  if (start < 0 || count < 0 || start + count > x.rows()) throw DimensionMismatch("slice_rows: out of range");
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(x.value().middleRows(start, count), x.requires_grad(),
                [ix, start, count](Tape<S>& t, int self) {
                  t.grad(ix).middleRows(start, count) += t.node(self).grad;
                },
                x.height(), x.width());
}

template <typename S>
Var<S> slice_cols(Var<S> x, long start, long count) {
  if (start < 0 || count < 0 || start + count > x.cols()) throw DimensionMismatch("slice_cols: out of range");
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(x.value().middleCols(start, count), x.requires_grad(),
                [ix, start, count](Tape<S>& t, int self) {
                  t.grad(ix).middleCols(start, count) += t.node(self).grad;
                },
                0, 0);
}

template <typename S>
Var<S> reshape(Var<S> x, long rows, long cols, int height, int width) {
  if (rows * cols != x.value().size()) throw DimensionMismatch("reshape: element count changes");
  Matrix<S> out = Eigen::Map<const Matrix<S>>(x.value().data(), rows, cols);
  const long r0 = x.rows(), c0 = x.cols();
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, r0, c0](Tape<S>& t, int self) {
                  const auto& g = t.node(self).grad;
                  t.grad(ix) += Eigen::Map<const Matrix<S>>(g.data(), r0, c0);
                },
                height, width);
}

template <typename S>
Var<S> transpose(Var<S> x) {
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(x.value().transpose(), x.requires_grad(),
                [ix](Tape<S>& t, int self) { t.grad(ix) += t.node(self).grad.transpose(); }, 0, 0);
}

template <typename S>
Var<S> sum(Var<S> x) {
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().sum();
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix](Tape<S>& t, int self) { t.grad(ix).array() += t.node(self).grad(0, 0); }, 1, 1);
}

template <typename S>
Var<S> mean(Var<S> x) {
  return scale(sum(x), S(1) / S(x.value().size()));
}

template <typename S>
Var<S> mean_abs(Var<S> x) {
  const S n = S(x.value().size());
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().cwiseAbs().sum() / n;
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix, n](Tape<S>& t, int self) {
                  const S g = t.node(self).grad(0, 0) / n;
                  t.grad(ix).array() += t.node(ix).value.array().sign() * g;
                },
                1, 1);
}

template <typename S>
Var<S> squared_norm(Var<S> x) {
  Matrix<S> out(1, 1);
  out(0, 0) = x.value().squaredNorm();
  Tape<S>& t = *x.tape;
  const int ix = x.id;
  return t.push(std::move(out), x.requires_grad(),
                [ix](Tape<S>& t, int self) {
                  t.grad(ix) += t.node(ix).value * (S(2) * t.node(self).grad(0, 0));
                },
                1, 1);
}

template <typename S>
void Tape<S>::backward(Var<S> root) {
  if (root.tape != this) throw InvalidInput("backward: variable belongs to another tape");
  if (root.rows() != 1 || root.cols() != 1) throw InvalidInput("backward: root must be a scalar");
  if (!root.requires_grad()) return;
  grad(root.id).setOnes();
  for (int id = root.id; id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, id);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

#define MSM_INSTANTIATE_OPS(S)                                                             \
  template Var<S> add(Var<S>, Var<S>);                                                     \
  template Var<S> sub(Var<S>, Var<S>);                                                     \
  template Var<S> mul(Var<S>, Var<S>);                                                     \
  template Var<S> scale(Var<S>, S);                                                        \
  template Var<S> leaky_relu(Var<S>, S);                                                   \
  template Var<S> gelu(Var<S>);                                                            \
  template Var<S> clamp(Var<S>, S, S);                                                     \
  template Var<S> conv2d(Var<S>, Var<S>, Var<S>, int, int, int);                           \
  template Var<S> avg_pool(Var<S>, int);                                                   \
  template Var<S> upsample_nearest(Var<S>, int);                                           \
  template Var<S> global_avg_pool(Var<S>);                                                 \
  template Var<S> add_channel_bias(Var<S>, Var<S>);                                        \
  template Var<S> scale_channels(Var<S>, Var<S>);                                          \
  template Var<S> total_variation(Var<S>);                                                 \
  template Var<S> matmul(Var<S>, Var<S>);                                                  \
  template Var<S> matmul_nt(Var<S>, Var<S>);                                               \
  template Var<S> linear(Var<S>, Var<S>, Var<S>);                                          \
  template Var<S> linear(Var<S>, Var<S>);                                                  \
  template Var<S> softmax_rows(Var<S>);                                                    \
  template Var<S> layer_norm_rows(Var<S>, Var<S>, Var<S>, S);                              \
  template Var<S> concat_rows(const std::vector<Var<S>>&);                                 \
  template Var<S> concat_cols(const std::vector<Var<S>>&);                                 \
  template Var<S> slice_rows(Var<S>, long, long);                                          \
  template Var<S> slice_cols(Var<S>, long, long);                                          \
  template Var<S> reshape(Var<S>, long, long, int, int);                                   \
  template Var<S> transpose(Var<S>);                                                       \
  template Var<S> sum(Var<S>);                                                             \
  template Var<S> mean(Var<S>);                                                            \
  template Var<S> mean_abs(Var<S>);                                                        \
  template Var<S> squared_norm(Var<S>);                                                    \
  template class Tape<S>;

MSM_INSTANTIATE_OPS(float)
MSM_INSTANTIATE_OPS(double)

}  // namespace msm::ad
