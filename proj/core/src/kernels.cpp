#include "mkv/kernels.hpp"

#include <algorithm>

namespace mkv {

namespace {

std::size_t row_count(std::span<const double> rows, std::size_t dim) {
  return dim == 0 ? 0 : rows.size() / dim;
}

std::size_t summed_count(std::size_t rows, std::size_t skip) {
  return (skip < rows) ? rows - 1 : rows;
}

}  // namespace

void PairKernel::sum_rows(std::span<const double> x, std::span<const double> rows,
                          std::size_t skip, std::span<double> out) const {
  const std::size_t d = state_dim();
  const std::size_t n = row_count(rows, d);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> value(value_dim());
  for (std::size_t j = 0; j < n; ++j) {
    if (j == skip) continue;
    evaluate(x, rows.subspan(j * d, d), value);
    for (std::size_t c = 0; c < value.size(); ++c) out[c] += value[c];
  }
}

void SeparableKernel::feature_totals(std::span<const double> rows,
                                     std::span<double> totals) const {
  const std::size_t d = state_dim();
  const std::size_t n = row_count(rows, d);
  const std::size_t s = feature_dim();
  std::vector<double> features(n * s);
  for (std::size_t j = 0; j < n; ++j)
    feature(rows.subspan(j * d, d), std::span<double>(features).subspan(j * s, s));
  for (std::size_t c = 0; c < s; ++c) totals[c] = ordered_sum(features.data() + c, n, s);
}

void SeparableKernel::sum_from_totals(std::span<const double> x, std::size_t count,
                                      std::span<const double> totals,
                                      std::span<const double> self_feature,
                                      std::span<double> out) const {
  base(x, out);
  const auto m = static_cast<double>(count);
  for (double& v : out) v *= m;
  double adjusted[16];
  std::vector<double> heap;
  double* buf = adjusted;
  if (totals.size() > 16) {
    heap.resize(totals.size());
    buf = heap.data();
  }
  for (std::size_t c = 0; c < totals.size(); ++c)
    buf[c] = self_feature.empty() ? totals[c] : totals[c] - self_feature[c];
  couple(x, std::span<const double>(buf, totals.size()), out);
}

// ---------------------------------------------------------------------------

DifferenceKernel::DifferenceKernel(std::size_t dim, double scale, StateFn offset)
    : SeparableKernel(dim, dim, dim), scale_(scale), offset_(std::move(offset)) {}

void DifferenceKernel::evaluate(std::span<const double> x, std::span<const double> y,
                                std::span<double> out) const {
  if (offset_)
    offset_(x, out);
  else
    std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) out[c] += scale_ * (x[c] - y[c]);
}

void DifferenceKernel::sum_rows(std::span<const double> x, std::span<const double> rows,
                                std::size_t skip, std::span<double> out) const {
  const std::size_t d = state_dim();
  const std::size_t n = row_count(rows, d);
  const auto m = static_cast<double>(summed_count(n, skip));
  base(x, out);
  for (std::size_t c = 0; c < d; ++c)
    out[c] = m * out[c] - scale_ * ordered_sum(rows.data() + c, n, d, skip);
}

void DifferenceKernel::base(std::span<const double> x, std::span<double> out) const {
  if (offset_)
    offset_(x, out);
  else
    std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < x.size(); ++c) out[c] += scale_ * x[c];
}

void DifferenceKernel::feature(std::span<const double> y, std::span<double> out) const {
  std::copy(y.begin(), y.end(), out.begin());
}

void DifferenceKernel::couple(std::span<const double>, std::span<const double> feature_sum,
                              std::span<double> out) const {
  for (std::size_t c = 0; c < out.size(); ++c) out[c] -= scale_ * feature_sum[c];
}

// ---------------------------------------------------------------------------

void PartnerKernel::evaluate(std::span<const double>, std::span<const double> y,
                             std::span<double> out) const {
  std::copy(y.begin(), y.end(), out.begin());
}

void PartnerKernel::sum_rows(std::span<const double>, std::span<const double> rows,
                             std::size_t skip, std::span<double> out) const {
  const std::size_t d = state_dim();
  const std::size_t n = row_count(rows, d);
  for (std::size_t c = 0; c < d; ++c) out[c] = ordered_sum(rows.data() + c, n, d, skip);
}

void PartnerKernel::base(std::span<const double>, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
}

void PartnerKernel::feature(std::span<const double> y, std::span<double> out) const {
  std::copy(y.begin(), y.end(), out.begin());
}

void PartnerKernel::couple(std::span<const double>, std::span<const double> feature_sum,
                           std::span<double> out) const {
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += feature_sum[c];
}

// ---------------------------------------------------------------------------

void SinDifferenceKernel::evaluate(std::span<const double> x, std::span<const double> y,
                                   std::span<double> out) const {
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = std::sin(x[c] - y[c]);
}

void SinDifferenceKernel::sum_rows(std::span<const double> x, std::span<const double> rows,
                                   std::size_t skip, std::span<double> out) const {
  const std::size_t d = state_dim();
  const std::size_t n = row_count(rows, d);
  std::vector<double> terms(n);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < n; ++j) terms[j] = std::sin(x[c] - rows[j * d + c]);
    out[c] = ordered_sum(terms.data(), n, 1, skip);
  }
}

// ---------------------------------------------------------------------------

ConstantKernel::ConstantKernel(std::size_t state_dim, std::vector<double> value)
    : PairKernel(state_dim, value.size()), value_(std::move(value)) {}

void ConstantKernel::evaluate(std::span<const double>, std::span<const double>,
                              std::span<double> out) const {
  std::copy(value_.begin(), value_.end(), out.begin());
}

void ConstantKernel::sum_rows(std::span<const double>, std::span<const double> rows,
                              std::size_t skip, std::span<double> out) const {
  const auto m = static_cast<double>(summed_count(row_count(rows, state_dim()), skip));
  for (std::size_t c = 0; c < value_.size(); ++c) out[c] = m * value_[c];
}

}  // namespace mkv
