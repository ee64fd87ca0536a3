#pragma once
#include <vector>

#include "aegcn/matrix.hpp"

namespace aegcn {

struct EvalMetrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Argmax-based accuracy and macro-averaged F1 over the masked rows. Ties in a
// probability row resolve to the lowest class index. Macro-F1 averages over
// all probs.cols classes, counting a class absent from both predictions and
// labels as F1 = 0; per-class precision or recall with a zero denominator is
// taken as 0.
EvalMetrics evaluate_predictions(const DenseMatrix& probs, const std::vector<index_t>& labels,
                                 const std::vector<index_t>& mask);

}  // namespace aegcn
