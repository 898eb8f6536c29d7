#pragma once

#include "msm/ad/tape.hpp"
#include "msm/random.hpp"

#include <cmath>
#include <vector>

namespace msm::ad {

/// Adam with bias correction and a constant learning rate.
template <typename Scalar>
class Adam {
 public:
  explicit Adam(Scalar lr, Scalar beta1 = Scalar(0.9), Scalar beta2 = Scalar(0.999), Scalar eps = Scalar(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update from the accumulated gradients (scaled by grad_scale) and clears them.
  void step(ParamSet<Scalar>& params, Scalar grad_scale = Scalar(1)) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Matrix<Scalar>::Zero(p.value.rows(), p.value.cols()));
        v_.push_back(Matrix<Scalar>::Zero(p.value.rows(), p.value.cols()));
      }
    }
    ++t_;
    const Scalar c1 = Scalar(1) - std::pow(beta1_, Scalar(t_));
    const Scalar c2 = Scalar(1) - std::pow(beta2_, Scalar(t_));
    for (int i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      auto& m = m_[static_cast<std::size_t>(i)];
      auto& v = v_[static_cast<std::size_t>(i)];
      const Matrix<Scalar> g = p.grad * grad_scale;
      m = beta1_ * m + (Scalar(1) - beta1_) * g;
      v = beta2_ * v + (Scalar(1) - beta2_) * g.cwiseAbs2();
      p.value.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
      p.grad.setZero();
    }
  }

  long steps() const { return t_; }
  void set_lr(Scalar lr) { lr_ = lr; }

 private:
  Scalar lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix<Scalar>> m_, v_;
};

/// Kaiming-uniform initialization for a layer with the given fan-in.
template <typename Scalar>
Matrix<Scalar> kaiming_uniform(long rows, long cols, long fan_in, Rng& rng, double gain = std::sqrt(2.0)) {
  const double bound = gain * std::sqrt(3.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m(i) = static_cast<Scalar>(dist(rng));
  return m;
}

template <typename Scalar>
Matrix<Scalar> normal_init(long rows, long cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix<Scalar> m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m(i) = static_cast<Scalar>(dist(rng));
  return m;
}

}  // namespace msm::ad
