#include "aegcn/model_common.hpp"

#include <cmath>
#include <cstring>

#include "aegcn/kernels.hpp"
#include "aegcn/nn.hpp"

namespace aegcn {
namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(sigmoid(z)) without overflow, floored at log(kLogFloor) to match the
// clamped-log convention of the standalone losses.
double clamped_log_sigmoid(double z) {
  static const double floor_log = std::log(kLogFloor);
  const double ls = z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
  return ls < floor_log ? floor_log : ls;
}

}  // namespace

VariantKind variant_from_string(std::string_view s) {
  if (s == "x") return VariantKind::FeatureTarget;
  if (s == "h") return VariantKind::HybridAdjacency;
  if (s == "a") return VariantKind::SummedAdjacency;
  if (s == "s") return VariantKind::SplitAdjacency;
  throw ArgumentError("unknown reconstruction variant \"" + std::string(s) +
                      "\"; expected one of x, h, a, s");
}

std::string variant_to_string(VariantKind v) {
  switch (v) {
    case VariantKind::FeatureTarget: return "x";
    case VariantKind::HybridAdjacency: return "h";
    case VariantKind::SummedAdjacency: return "a";
    case VariantKind::SplitAdjacency: return "s";
  }
  throw ArgumentError("invalid variant enum value");
}

double decoder_pass(const DenseMatrix& v, const DenseMatrix& w, const ReconSpec& target,
                    bool full_bce, double gamma, index_t block_rows,
                    DenseMatrix* grad_w, DenseMatrix* grad_v, SparseMatrix* sampled_neglog) {
  if ((target.sparse == nullptr) == (target.dense == nullptr))
    throw ArgumentError("decoder_pass: exactly one target must be given");
  if (sampled_neglog != nullptr && target.sparse == nullptr)
    throw ArgumentError("decoder_pass: sampled_neglog requires a sparse target");
  const index_t tr = target.sparse ? target.sparse->rows : target.dense->rows;
  const index_t tc = target.sparse ? target.sparse->cols : target.dense->cols;
  if (v.cols != w.rows) throw DimensionError("decoder_pass: V and W widths differ");
  if (tr != v.rows || tc != w.cols) throw DimensionError("decoder_pass: target shape mismatch");
  if (grad_w != nullptr && (grad_w->rows != w.rows || grad_w->cols != w.cols))
    throw DimensionError("decoder_pass: grad_w shape mismatch");
  if (grad_v != nullptr && !grad_v->same_shape(v))
    throw DimensionError("decoder_pass: grad_v shape mismatch");
  if (block_rows <= 0) throw ArgumentError("decoder_pass: block_rows must be positive");

  const double scale = 1.0 / (static_cast<double>(tr) * static_cast<double>(tc));
  const bool want_grads = (grad_w != nullptr || grad_v != nullptr) && gamma != 0.0;
  const auto& kt = kernels::active();

  if (sampled_neglog != nullptr) {
    *sampled_neglog = *target.sparse;
    std::fill(sampled_neglog->values.begin(), sampled_neglog->values.end(), 0.0);
  }

  const index_t bmax = block_rows < tr ? block_rows : tr;
  DenseMatrix zb(bmax, tc);
  DenseMatrix dzb;
  if (want_grads) dzb = DenseMatrix(bmax, tc);

  double loss_raw = 0.0;
  for (index_t r0 = 0; r0 < tr; r0 += block_rows) {
    const index_t rows_here = (tr - r0 < block_rows) ? tr - r0 : block_rows;
    kt.gemm_nn(rows_here, tc, v.cols, v.row(r0), v.cols, w.v.data(), tc, zb.v.data(), tc, false);

    if (target.sparse != nullptr) {
      const SparseMatrix& t = *target.sparse;
      if (!full_bce) {
        if (want_grads)
          std::memset(dzb.v.data(), 0, static_cast<std::size_t>(rows_here) * tc * sizeof(double));
        for (index_t i = 0; i < rows_here; ++i) {
          const index_t gi = r0 + i;
          for (index_t q = t.row_ptr[gi]; q < t.row_ptr[gi + 1]; ++q) {
            const index_t j = t.col_idx[q];
            const double tv = t.values[q];
            const double z = zb(i, j);
            loss_raw -= tv * clamped_log_sigmoid(z);
            if (want_grads) dzb(i, j) = -gamma * scale * tv * (1.0 - stable_sigmoid(z));
            if (sampled_neglog != nullptr)
              sampled_neglog->values[q] = -gamma * scale * clamped_log_sigmoid(z);
          }
        }
      } else {
        for (index_t i = 0; i < rows_here; ++i) {
          for (index_t j = 0; j < tc; ++j) {
            const double z = zb(i, j);
            loss_raw -= clamped_log_sigmoid(-z);
            if (want_grads) dzb(i, j) = gamma * scale * stable_sigmoid(z);
          }
        }
        for (index_t i = 0; i < rows_here; ++i) {
          const index_t gi = r0 + i;
          for (index_t q = t.row_ptr[gi]; q < t.row_ptr[gi + 1]; ++q) {
            const index_t j = t.col_idx[q];
            const double tv = t.values[q];
            const double z = zb(i, j);
            const double lpz = clamped_log_sigmoid(z);
            const double lnz = clamped_log_sigmoid(-z);
            loss_raw += tv * (lnz - lpz);
            if (want_grads) dzb(i, j) = gamma * scale * (stable_sigmoid(z) - tv);
            if (sampled_neglog != nullptr)
              sampled_neglog->values[q] = gamma * scale * (lnz - lpz);
          }
        }
      }
    } else {
      const DenseMatrix& t = *target.dense;
      if (want_grads && !full_bce)
        std::memset(dzb.v.data(), 0, static_cast<std::size_t>(rows_here) * tc * sizeof(double));
      for (index_t i = 0; i < rows_here; ++i) {
        const double* trow = t.row(r0 + i);
        for (index_t j = 0; j < tc; ++j) {
          const double tv = trow[j];
          if (!full_bce && tv == 0.0) continue;
          const double z = zb(i, j);
          if (full_bce) {
            loss_raw -= tv * clamped_log_sigmoid(z) + (1.0 - tv) * clamped_log_sigmoid(-z);
            if (want_grads) dzb(i, j) = gamma * scale * (stable_sigmoid(z) - tv);
          } else {
            loss_raw -= tv * clamped_log_sigmoid(z);
            if (want_grads) dzb(i, j) = -gamma * scale * tv * (1.0 - stable_sigmoid(z));
          }
        }
      }
    }

    if (want_grads) {
      if (grad_w != nullptr)
        kt.gemm_tn(v.cols, tc, rows_here, v.row(r0), v.cols, dzb.v.data(), tc,
                   grad_w->v.data(), tc, true);
      if (grad_v != nullptr)
        kt.gemm_nt(rows_here, v.cols, tc, dzb.v.data(), tc, w.v.data(), tc,
                   grad_v->row(r0), v.cols, true);
    }
  }
  return loss_raw * scale;
}

}  // namespace aegcn
