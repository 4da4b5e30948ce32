#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ligflow/error.hpp"

namespace ligflow::ad {

// Dense row-major matrix of doubles. Geometric quantities are stored as
// "vector blocks": a stack of d_v 3-vectors on k entities is a [3k, d_v]
// matrix whose rows 3i..3i+2 are the x/y/z components of entity i.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  double item() const {
    if (size() != 1) fail(Errc::not_scalar, "Tensor::item on non-scalar");
    return data_[0];
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Ordered collection of named parameter tensors. Declaration order is part of
// the contract: checkpoints serialize tensors in this order.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  const Tensor* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  std::size_t size() const { return items_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
  std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradMap = std::unordered_map<std::string, Tensor>;
using ValueId = std::int32_t;

// Eager tape: every operation evaluates immediately and records enough to run
// reverse-mode accumulation from any scalar node. Nodes are created in
// topological order by construction.
class Tape {
 public:
  ValueId constant(Tensor value);
  ValueId param(const ParamStore& store, std::string_view name);

  ValueId matmul(ValueId a, ValueId b);
  ValueId add(ValueId a, ValueId b);
  ValueId sub(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId scale(ValueId a, double k);
  ValueId add_rowvec(ValueId m, ValueId row);      // row: [1, n]
  ValueId concat_cols(const std::vector<ValueId>& parts);
  ValueId gather_rows(ValueId a, std::vector<std::int32_t> idx);
  ValueId scatter_add_rows(ValueId a, std::vector<std::int32_t> idx, int out_rows);
  ValueId silu(ValueId a);
  ValueId sigmoid(ValueId a);
  // Per-column L2 norm over 3-row blocks: [3k, c] -> [k, c].
  ValueId vnorm(ValueId v);
  // Broadcast a per-entity gate over 3-row blocks: [3k, c] * [k, c] -> [3k, c].
  ValueId vgate(ValueId v, ValueId gate);
  // Gaussian radial basis of distances: [m, 1] -> [m, n_bases].
  ValueId rbf(ValueId d, int n_bases, double r_max);
  ValueId safe_recip(ValueId a);                   // 1/x with 0 -> 0
  ValueId sum_all(ValueId a);                      // -> [1, 1]
  ValueId mean_all(ValueId a);                     // -> [1, 1]
  // Cross entropy -log softmax(logits)[target] averaged over masked rows;
  // exactly zero (with zero gradient) when nothing is masked.
  ValueId ce_masked(ValueId logits, std::vector<std::int32_t> targets,
                    std::vector<std::uint8_t> masked);

  const Tensor& value(ValueId id) const { return nodes_[id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Reverse-mode gradients of a scalar node with respect to all parameter
  // leaves reachable from it. Throws NotScalar if `loss` is not 1x1.
  GradMap backward(ValueId loss) const;

 private:
  enum class Op : std::uint8_t {
    kConstant, kParam, kMatmul, kAdd, kSub, kMul, kScale, kAddRowvec, kConcatCols,
    kGatherRows, kScatterAddRows, kSilu, kSigmoid, kVnorm, kVgate, kRbf,
    kSafeRecip, kSumAll, kMeanAll, kCeMasked,
  };

  struct Node {
    Op op;
    Tensor value;
    ValueId a = -1, b = -1;
    std::vector<ValueId> inputs;          // concat only
    std::vector<std::int32_t> indices;    // gather/scatter/ce targets
    std::vector<std::uint8_t> mask;       // ce
    double k = 0.0;                       // scale factor / rbf r_max
    int extent = 0;                       // scatter out_rows / rbf n_bases
    std::string param_name;
  };

  ValueId push(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<ValueId>(nodes_.size() - 1);
  }
  const Tensor& val(ValueId id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
};

// Finite-difference verification. `value_fn` must be pure given the params;
// `grad_fn` produces the analytic gradients under test at the same point.
struct GradCheckReport {
  std::string block;
  double max_rel_dev = 0.0;
  bool ok = false;
};

std::vector<GradCheckReport> grad_check(
    const std::function<double(const ParamStore&)>& value_fn,
    const std::function<GradMap(const ParamStore&)>& grad_fn,
    ParamStore& params, double h, double tol);

}  // namespace ligflow::ad
