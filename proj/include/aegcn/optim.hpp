#pragma once
// Parameter initialization and the Adam optimizer. Updates walk parameters in
// a caller-fixed order with fixed-order arithmetic, so training is
// deterministic for a given seed.
#include <cstdint>
#include <string>
#include <vector>

#include "aegcn/matrix.hpp"
#include "aegcn/rng.hpp"

namespace aegcn {

// Glorot/Xavier uniform: entries ~ U(-L, L) with L = sqrt(6/(n_in + n_out)),
// drawn row-major from the stream.
DenseMatrix glorot_init(index_t n_in, index_t n_out, RandomStream& stream);

// One named parameter slot: the tensor, its gradient, and whether weight
// decay applies (biases opt out).
struct ParamSlot {
  std::string name;
  DenseMatrix* param = nullptr;
  const DenseMatrix* grad = nullptr;
  bool decay = true;
};

class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  Adam(double lr, double weight_decay) : lr_(lr), weight_decay_(weight_decay) {}

  // Applies one bias-corrected update to every slot, in order. Weight decay
  // enters as an L2 gradient term (grad + wd * param) before the moments.
  // A non-finite gradient raises NumericError naming the parameter.
  void step(const std::vector<ParamSlot>& slots);

  long steps_taken() const { return t_; }

 private:
  double lr_;
  double weight_decay_;
  long t_ = 0;
  std::vector<DenseMatrix> m_;
  std::vector<DenseMatrix> v_;
};

}  // namespace aegcn
