#include "aegcn/metrics.hpp"

#include "aegcn/errors.hpp"

namespace aegcn {

EvalMetrics evaluate_predictions(const DenseMatrix& probs, const std::vector<index_t>& labels,
                                 const std::vector<index_t>& mask) {
  if (probs.cols < 1) throw ArgumentError("predictions have no classes");
  if (probs.rows != static_cast<index_t>(labels.size())) {
    throw ArgumentError("label count does not match prediction rows");
  }
  if (mask.empty()) throw ArgumentError("evaluation mask is empty");

  const index_t f = probs.cols;
  std::vector<index_t> tp(static_cast<std::size_t>(f), 0);
  std::vector<index_t> fp(static_cast<std::size_t>(f), 0);
  std::vector<index_t> fn(static_cast<std::size_t>(f), 0);
  index_t correct = 0;
  for (index_t i : mask) {
    if (i < 0 || i >= probs.rows) throw ArgumentError("evaluation mask index out of range");
    const index_t y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= f) throw ArgumentError("masked node has no valid label");
    const double* row = probs.row(i);
    index_t pred = 0;
    for (index_t c = 1; c < f; ++c) {
      if (row[c] > row[pred]) pred = c;
    }
    if (pred == y) {
      ++correct;
      ++tp[static_cast<std::size_t>(y)];
    } else {
      ++fp[static_cast<std::size_t>(pred)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }

  EvalMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(mask.size());
  double f1_sum = 0.0;
  for (index_t c = 0; c < f; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double p_den = static_cast<double>(tp[i] + fp[i]);
    const double r_den = static_cast<double>(tp[i] + fn[i]);
    const double prec = p_den > 0.0 ? static_cast<double>(tp[i]) / p_den : 0.0;
    const double rec = r_den > 0.0 ? static_cast<double>(tp[i]) / r_den : 0.0;
    f1_sum += (prec + rec) > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
  }
  m.macro_f1 = f1_sum / static_cast<double>(f);
  return m;
}

}  // namespace aegcn
