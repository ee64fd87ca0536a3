#include "aegcn/optim.hpp"

#include <cmath>

#include "aegcn/errors.hpp"

namespace aegcn {

DenseMatrix glorot_init(index_t n_in, index_t n_out, RandomStream& stream) {
  if (n_in <= 0 || n_out <= 0) throw ArgumentError("glorot_init: dimensions must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
  DenseMatrix w(n_in, n_out);
  for (double& x : w.v) x = stream.uniform(-limit, limit);
  return w;
}

void Adam::step(const std::vector<ParamSlot>& slots) {
  if (m_.empty()) {
    m_.reserve(slots.size());
    v_.reserve(slots.size());
    for (const ParamSlot& s : slots) {
      m_.emplace_back(s.param->rows, s.param->cols);
      v_.emplace_back(s.param->rows, s.param->cols);
    }
  } else if (m_.size() != slots.size()) {
    throw ArgumentError("adam: slot count changed between steps");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const ParamSlot& s = slots[k];
    if (!s.param->same_shape(*s.grad) || !s.param->same_shape(m_[k]))
      throw DimensionError("adam: gradient shape mismatch for " + s.name);
    DenseMatrix& m = m_[k];
    DenseMatrix& v = v_[k];
    for (std::size_t i = 0; i < s.param->v.size(); ++i) {
      double g = s.grad->v[i];
      if (!std::isfinite(g))
        throw NumericError("adam: non-finite gradient in " + s.name + " at step " +
                           std::to_string(t_));
      if (s.decay && weight_decay_ != 0.0) g += weight_decay_ * s.param->v[i];
      m.v[i] = kBeta1 * m.v[i] + (1.0 - kBeta1) * g;
      v.v[i] = kBeta2 * v.v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m.v[i] / bc1;
      const double vhat = v.v[i] / bc2;
      s.param->v[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

}  // namespace aegcn
