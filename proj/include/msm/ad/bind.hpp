#pragma once

#include "msm/ad/tape.hpp"

#include <vector>

namespace msm::ad {

/// Binds a network's parameters to a tape for one forward pass.
///
/// Constructed from a mutable ParamSet the parameters become gradient leaves;
/// from a const ParamSet they enter as constants (frozen / inference).
template <typename Scalar>
class Bound {
 public:
  Bound(Tape<Scalar>& tape, ParamSet<Scalar>& params)
      : tape_(&tape), mutable_(&params), const_(&params), ids_(static_cast<std::size_t>(params.size()), -1) {}
  Bound(Tape<Scalar>& tape, const ParamSet<Scalar>& params)
      : tape_(&tape), const_(&params), ids_(static_cast<std::size_t>(params.size()), -1) {}

  Var<Scalar> operator[](int index) {
    int& id = ids_[static_cast<std::size_t>(index)];
    if (id < 0)
      id = mutable_ != nullptr ? tape_->parameter((*mutable_)[index]).id : tape_->constant((*const_)[index].value).id;
    return Var<Scalar>{tape_, id};
  }

  Tape<Scalar>& tape() { return *tape_; }
  bool trainable() const { return mutable_ != nullptr; }

 private:
  Tape<Scalar>* tape_;
  ParamSet<Scalar>* mutable_ = nullptr;
  const ParamSet<Scalar>* const_;
  std::vector<int> ids_;
};

}  // namespace msm::ad
