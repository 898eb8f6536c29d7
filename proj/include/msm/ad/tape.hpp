#pragma once

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every value on the tape is a dynamic matrix. Feature maps use the layout
// (channels, height * width) with pixel index y * width + x, and carry their
// spatial extent as node metadata. Plain matrices (token rows, embeddings)
// have height 1 and width equal to their column count.

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace msm::ad {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
};

/// Ordered, named collection of trainable tensors owned by one network.
template <typename Scalar>
class ParamSet {
 public:
  int add(std::string name, Matrix<Scalar> init) {
    Parameter<Scalar> p{std::move(name), std::move(init), {}};
    p.grad = Matrix<Scalar>::Zero(p.value.rows(), p.value.cols());
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
  }

  Parameter<Scalar>& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
  const Parameter<Scalar>& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(params_.size()); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  long count() const {
    long n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  /// Returns -1 when absent.
  int find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  template <typename Other>
  ParamSet<Other> cast() const {
    ParamSet<Other> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<Other>());
    return out;
  }

 private:
  std::vector<Parameter<Scalar>> params_;
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const Matrix<Scalar>& value() const;
  long rows() const { return value().rows(); }
  long cols() const { return value().cols(); }
  int height() const;
  int width() const;
  bool requires_grad() const;
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, int self)>;

  struct Node {
    Mat value;
    Mat grad;
    int height = 1;
    int width = 1;
    bool requires_grad = false;
    Parameter<Scalar>* param = nullptr;
    Backward backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives gradient. height/width default to a 1-row layout.
  Var<Scalar> constant(Mat value, int height = 0, int width = 0) {
    return push(std::move(value), false, nullptr, height, width);
  }

  /// Leaf whose gradient is accumulated into p.grad by backward().
  Var<Scalar> parameter(Parameter<Scalar>& p) {
    Var<Scalar> v = push(p.value, true, nullptr, 0, 0);
    nodes_.back().param = &p;
    return v;
  }

  /// Leaf that receives gradient but is not bound to a parameter (input sensitivity).
  Var<Scalar> variable(Mat value, int height = 0, int width = 0) {
    return push(std::move(value), true, nullptr, height, width);
  }

  Var<Scalar> push(Mat value, bool requires_grad, Backward backward, int height, int width) {
    Node n;
    if (height <= 0 || width <= 0) {
      height = 1;
      width = static_cast<int>(value.cols());
    }
    n.height = height;
    n.width = width;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  /// Gradient buffer of a node, zero-initialized on first access.
  Mat& grad(int id) {
    Node& n = node(id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  /// Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates to every leaf.
  void backward(Var<Scalar> root);

  std::size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
  return tape->node(id).value;
}
template <typename Scalar>
int Var<Scalar>::height() const {
  return tape->node(id).height;
}
template <typename Scalar>
int Var<Scalar>::width() const {
  return tape->node(id).width;
}
template <typename Scalar>
bool Var<Scalar>::requires_grad() const {
  return tape->node(id).requires_grad;
}

}  // namespace msm::ad

namespace msm::ad {
extern template class Tape<float>;
extern template class Tape<double>;
}  // namespace msm::ad
