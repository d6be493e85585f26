#pragma once

#include <functional>
#include <memory>

#include "mkv/common.hpp"

namespace mkv {

/**
 * @brief Interaction kernel k: R^d x R^d -> R^r.
 *
 * `sum_rows` is the hot loop of every solver: it adds k(x, y_j) over the rows
 * of a contiguous block of particle positions. Concrete kernels override it
 * with a tight loop; the base version falls back to `evaluate` per pair.
 */
class PairKernel {
 public:
  PairKernel(std::size_t state_dim, std::size_t value_dim)
      : state_dim_(state_dim), value_dim_(value_dim) {}
  virtual ~PairKernel() = default;

  std::size_t state_dim() const { return state_dim_; }
  std::size_t value_dim() const { return value_dim_; }

  virtual void evaluate(std::span<const double> x, std::span<const double> y,
                        std::span<double> out) const = 0;

  /// out = sum over rows j != skip of k(x, rows_j). `rows` has state_dim() columns.
  virtual void sum_rows(std::span<const double> x, std::span<const double> rows, std::size_t skip,
                        std::span<double> out) const;

 private:
  std::size_t state_dim_;
  std::size_t value_dim_;
};

/**
 * @brief Kernel of the form k(x, y) = base(x) + coupling(x) * feature(y).
 *
 * The sum over all j != i then only needs sum_j feature(y_j), computed once
 * per step, which turns the O(N^2) interaction into O(N).
 */
class SeparableKernel : public PairKernel {
 public:
  SeparableKernel(std::size_t state_dim, std::size_t value_dim, std::size_t feature_dim)
      : PairKernel(state_dim, value_dim), feature_dim_(feature_dim) {}

  std::size_t feature_dim() const { return feature_dim_; }

  virtual void base(std::span<const double> x, std::span<double> out) const = 0;
  virtual void feature(std::span<const double> y, std::span<double> out) const = 0;
  /// out += coupling(x) * feature_sum
  virtual void couple(std::span<const double> x, std::span<const double> feature_sum,
                      std::span<double> out) const = 0;

  /// Column sums of feature(rows_j) over all rows, in canonical order.
  void feature_totals(std::span<const double> rows, std::span<double> totals) const;

  /// sum_{j != self} k(x, y_j) from precomputed totals; `self_feature` is feature(y_self).
  void sum_from_totals(std::span<const double> x, std::size_t count,
                       std::span<const double> totals, std::span<const double> self_feature,
                       std::span<double> out) const;

 private:
  std::size_t feature_dim_;
};

using StateFn = std::function<void(std::span<const double>, std::span<double>)>;

/// k(x, y) = offset(x) + scale * (x - y); offset is optional. Separable.
class DifferenceKernel final : public SeparableKernel {
 public:
  explicit DifferenceKernel(std::size_t dim, double scale = 1.0, StateFn offset = {});

  void evaluate(std::span<const double> x, std::span<const double> y,
                std::span<double> out) const override;
  void sum_rows(std::span<const double> x, std::span<const double> rows, std::size_t skip,
                std::span<double> out) const override;
  void base(std::span<const double> x, std::span<double> out) const override;
  void feature(std::span<const double> y, std::span<double> out) const override;
  void couple(std::span<const double> x, std::span<const double> feature_sum,
              std::span<double> out) const override;

 private:
  double scale_;
  StateFn offset_;
};

/// k(x, y) = y. Separable.
class PartnerKernel final : public SeparableKernel {
 public:
  explicit PartnerKernel(std::size_t dim) : SeparableKernel(dim, dim, dim) {}

  void evaluate(std::span<const double> x, std::span<const double> y,
                std::span<double> out) const override;
  void sum_rows(std::span<const double> x, std::span<const double> rows, std::size_t skip,
                std::span<double> out) const override;
  void base(std::span<const double> x, std::span<double> out) const override;
  void feature(std::span<const double> y, std::span<double> out) const override;
  void couple(std::span<const double> x, std::span<const double> feature_sum,
              std::span<double> out) const override;
};

/// k(x, y) = sin(x - y) componentwise.
class SinDifferenceKernel final : public PairKernel {
 public:
  explicit SinDifferenceKernel(std::size_t dim) : PairKernel(dim, dim) {}

  void evaluate(std::span<const double> x, std::span<const double> y,
                std::span<double> out) const override;
  void sum_rows(std::span<const double> x, std::span<const double> rows, std::size_t skip,
                std::span<double> out) const override;
};

/// k(x, y) = c.
class ConstantKernel final : public PairKernel {
 public:
  ConstantKernel(std::size_t state_dim, std::vector<double> value);

  void evaluate(std::span<const double> x, std::span<const double> y,
                std::span<double> out) const override;
  void sum_rows(std::span<const double> x, std::span<const double> rows, std::size_t skip,
                std::span<double> out) const override;

 private:
  std::vector<double> value_;
};

/// Arbitrary user kernel; always takes the generic pairwise path.
class FunctionKernel final : public PairKernel {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<const double>, std::span<double>)>;

  FunctionKernel(std::size_t state_dim, std::size_t value_dim, Fn fn)
      : PairKernel(state_dim, value_dim), fn_(std::move(fn)) {}

  void evaluate(std::span<const double> x, std::span<const double> y,
                std::span<double> out) const override {
    fn_(x, y, out);
  }

 private:
  Fn fn_;
};

}  // namespace mkv
