#include "ligflow/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/Dense>

namespace ligflow::ad {
namespace {

using EigenMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EigenMat>;
using ConstMap = Eigen::Map<const EigenMat>;

ConstMap cmap(const Tensor& t) { return ConstMap(t.data(), t.rows(), t.cols()); }
Map mmap(Tensor& t) { return Map(t.data(), t.rows(), t.cols()); }

void require(bool cond, const char* what) {
  if (!cond) fail(Errc::size_mismatch, what);
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Centers linearly spaced on [0, r_max]; width equals the center spacing.
struct RbfGrid {
  double width;
  double center(int k) const { return first + step * k; }
  double first, step;
};

RbfGrid rbf_grid(int n_bases, double r_max) {
  if (n_bases <= 1) return {r_max > 0 ? r_max : 1.0, 0.0, 0.0};
  const double step = r_max / (n_bases - 1);
  return {step, 0.0, step};
}

}  // namespace

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
  Tensor t(r, c);
  int i = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) fail(Errc::size_mismatch, "ragged initializer");
    int j = 0;
    for (double v : row) t(i, j++) = v;
    ++i;
  }
  return t;
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (index_.contains(name)) fail(Errc::duplicate_modality, "duplicate parameter " + name);
  index_.emplace(name, items_.size());
  items_.emplace_back(name, std::move(value));
  return items_.back().second;
}

Tensor& ParamStore::at(std::string_view name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

const Tensor& ParamStore::at(std::string_view name) const {
  const Tensor* t = find(name);
  if (t == nullptr) fail(Errc::unknown_modality, "no parameter named " + std::string(name));
  return *t;
}

const Tensor* ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &items_[it->second].second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

ValueId Tape::constant(Tensor value) {
  Node n;
  n.op = Op::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

ValueId Tape::param(const ParamStore& store, std::string_view name) {
  Node n;
  n.op = Op::kParam;
  n.value = store.at(name);
  n.param_name = std::string(name);
  return push(std::move(n));
}

ValueId Tape::matmul(ValueId a, ValueId b) {
  require(val(a).cols() == val(b).rows(), "matmul inner dims");
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.value = Tensor(val(a).rows(), val(b).cols());
  mmap(n.value) = cmap(val(a)) * cmap(val(b));
  return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
  require(val(a).same_shape(val(b)), "add shapes");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = val(a);
  mmap(n.value) += cmap(val(b));
  return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
  require(val(a).same_shape(val(b)), "sub shapes");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = val(a);
  mmap(n.value) -= cmap(val(b));
  return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
  require(val(a).same_shape(val(b)), "mul shapes");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.value = val(a);
  mmap(n.value).array() *= cmap(val(b)).array();
  return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double k) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.k = k;
  n.value = val(a);
  mmap(n.value) *= k;
  return push(std::move(n));
}

ValueId Tape::add_rowvec(ValueId m, ValueId row) {
  require(val(row).rows() == 1 && val(row).cols() == val(m).cols(), "add_rowvec shapes");
  Node n;
  n.op = Op::kAddRowvec;
  n.a = m;
  n.b = row;
  n.value = val(m);
  mmap(n.value).rowwise() += cmap(val(row)).row(0);
  return push(std::move(n));
}

ValueId Tape::concat_cols(const std::vector<ValueId>& parts) {
  require(!parts.empty(), "concat_cols empty");
  const int rows = val(parts[0]).rows();
  int cols = 0;
  for (ValueId p : parts) {
    require(val(p).rows() == rows, "concat_cols row mismatch");
    cols += val(p).cols();
  }
  Node n;
  n.op = Op::kConcatCols;
  n.inputs = parts;
  n.value = Tensor(rows, cols);
  int at = 0;
  for (ValueId p : parts) {
    mmap(n.value).middleCols(at, val(p).cols()) = cmap(val(p));
    at += val(p).cols();
  }
  return push(std::move(n));
}

ValueId Tape::gather_rows(ValueId a, std::vector<std::int32_t> idx) {
  const Tensor& src = val(a);
  Node n;
  n.op = Op::kGatherRows;
  n.a = a;
  n.value = Tensor(static_cast<int>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < src.rows(), "gather_rows index");
    std::copy_n(src.data() + static_cast<std::size_t>(idx[i]) * src.cols(), src.cols(),
                n.value.data() + i * src.cols());
  }
  n.indices = std::move(idx);
  return push(std::move(n));
}

ValueId Tape::scatter_add_rows(ValueId a, std::vector<std::int32_t> idx, int out_rows) {
  const Tensor& src = val(a);
  require(static_cast<int>(idx.size()) == src.rows(), "scatter_add_rows index count");
  Node n;
  n.op = Op::kScatterAddRows;
  n.a = a;
  n.extent = out_rows;
  n.value = Tensor(out_rows, src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] >= 0 && idx[i] < out_rows, "scatter_add_rows index");
    double* dst = n.value.data() + static_cast<std::size_t>(idx[i]) * src.cols();
    const double* s = src.data() + i * src.cols();
    for (int c = 0; c < src.cols(); ++c) dst[c] += s[c];
  }
  n.indices = std::move(idx);
  return push(std::move(n));
}

ValueId Tape::silu(ValueId a) {
  Node n;
  n.op = Op::kSilu;
  n.a = a;
  n.value = val(a);
  for (double& v : n.value.raw()) v = v * sigmoid_scalar(v);
  return push(std::move(n));
}

ValueId Tape::sigmoid(ValueId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.value = val(a);
  for (double& v : n.value.raw()) v = sigmoid_scalar(v);
  return push(std::move(n));
}

ValueId Tape::vnorm(ValueId v) {
  const Tensor& src = val(v);
  require(src.rows() % 3 == 0, "vnorm rows not a multiple of 3");
  const int k = src.rows() / 3;
  Node n;
  n.op = Op::kVnorm;
  n.a = v;
  n.value = Tensor(k, src.cols());
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < src.cols(); ++c) {
      const double a0 = src(3 * i, c), a1 = src(3 * i + 1, c), a2 = src(3 * i + 2, c);
      n.value(i, c) = std::sqrt(a0 * a0 + a1 * a1 + a2 * a2);
    }
  }
  return push(std::move(n));
}

ValueId Tape::vgate(ValueId v, ValueId gate) {
  const Tensor& src = val(v);
  const Tensor& g = val(gate);
  require(src.rows() == 3 * g.rows() && src.cols() == g.cols(), "vgate shapes");
  Node n;
  n.op = Op::kVgate;
  n.a = v;
  n.b = gate;
  n.value = src;
  for (int i = 0; i < g.rows(); ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < g.cols(); ++c) n.value(3 * i + r, c) *= g(i, c);
  return push(std::move(n));
}

ValueId Tape::rbf(ValueId d, int n_bases, double r_max) {
  const Tensor& src = val(d);
  require(src.cols() == 1 && n_bases >= 1 && r_max > 0, "rbf config");
  const RbfGrid grid = rbf_grid(n_bases, r_max);
  Node n;
  n.op = Op::kRbf;
  n.a = d;
  n.extent = n_bases;
  n.k = r_max;
  n.value = Tensor(src.rows(), n_bases);
  const double inv2w2 = 1.0 / (2.0 * grid.width * grid.width);
  for (int i = 0; i < src.rows(); ++i) {
    const double x = src(i, 0);
    for (int k = 0; k < n_bases; ++k) {
      const double dx = x - grid.center(k);
      n.value(i, k) = std::exp(-dx * dx * inv2w2);
    }
  }
  return push(std::move(n));
}

ValueId Tape::safe_recip(ValueId a) {
  Node n;
  n.op = Op::kSafeRecip;
  n.a = a;
  n.value = val(a);
  for (double& v : n.value.raw()) v = (v == 0.0) ? 0.0 : 1.0 / v;
  return push(std::move(n));
}

ValueId Tape::sum_all(ValueId a) {
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.value = Tensor::scalar(cmap(val(a)).sum());
  return push(std::move(n));
}

ValueId Tape::mean_all(ValueId a) {
  require(val(a).size() > 0, "mean_all on empty");
  Node n;
  n.op = Op::kMeanAll;
  n.a = a;
  n.value = Tensor::scalar(cmap(val(a)).sum() / static_cast<double>(val(a).size()));
  return push(std::move(n));
}

ValueId Tape::ce_masked(ValueId logits, std::vector<std::int32_t> targets,
                        std::vector<std::uint8_t> masked) {
  const Tensor& lg = val(logits);
  require(static_cast<int>(targets.size()) == lg.rows(), "ce_masked target count");
  require(static_cast<int>(masked.size()) == lg.rows(), "ce_masked mask count");
  int n_masked = 0;
  double loss = 0.0;
  for (int i = 0; i < lg.rows(); ++i) {
    if (!masked[i]) continue;
    require(targets[i] >= 0 && targets[i] < lg.cols(), "ce_masked target range");
    ++n_masked;
    double mx = lg(i, 0);
    for (int c = 1; c < lg.cols(); ++c) mx = std::max(mx, lg(i, c));
    double lse = 0.0;
    for (int c = 0; c < lg.cols(); ++c) lse += std::exp(lg(i, c) - mx);
    loss += (mx + std::log(lse)) - lg(i, targets[i]);
  }
  Node n;
  n.op = Op::kCeMasked;
  n.a = logits;
  n.indices = std::move(targets);
  n.mask = std::move(masked);
  n.extent = n_masked;
  n.value = Tensor::scalar(n_masked > 0 ? loss / n_masked : 0.0);
  return push(std::move(n));
}

GradMap Tape::backward(ValueId loss) const {
  if (val(loss).size() != 1) fail(Errc::not_scalar, "backward source must be 1x1");

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss] = Tensor::scalar(1.0);

  auto accum = [&](ValueId id, auto&& fold) {
    if (!grads[id]) {
      grads[id] = Tensor(val(id).rows(), val(id).cols());
    }
    fold(*grads[id]);
  };

  for (ValueId id = static_cast<ValueId>(nodes_.size()) - 1; id >= 0; --id) {
    if (!grads[id]) continue;
    const Node& n = nodes_[id];
    const Tensor& g = *grads[id];
    switch (n.op) {
      case Op::kConstant:
      case Op::kParam:
        break;
      case Op::kMatmul:
        accum(n.a, [&](Tensor& d) { mmap(d) += cmap(g) * cmap(val(n.b)).transpose(); });
        accum(n.b, [&](Tensor& d) { mmap(d) += cmap(val(n.a)).transpose() * cmap(g); });
        break;
      case Op::kAdd:
        accum(n.a, [&](Tensor& d) { mmap(d) += cmap(g); });
        accum(n.b, [&](Tensor& d) { mmap(d) += cmap(g); });
        break;
      case Op::kSub:
        accum(n.a, [&](Tensor& d) { mmap(d) += cmap(g); });
        accum(n.b, [&](Tensor& d) { mmap(d) -= cmap(g); });
        break;
      case Op::kMul:
        accum(n.a, [&](Tensor& d) { mmap(d).array() += cmap(g).array() * cmap(val(n.b)).array(); });
        accum(n.b, [&](Tensor& d) { mmap(d).array() += cmap(g).array() * cmap(val(n.a)).array(); });
        break;
      case Op::kScale:
        accum(n.a, [&](Tensor& d) { mmap(d) += n.k * cmap(g); });
        break;
      case Op::kAddRowvec:
        accum(n.a, [&](Tensor& d) { mmap(d) += cmap(g); });
        accum(n.b, [&](Tensor& d) { mmap(d).row(0) += cmap(g).colwise().sum(); });
        break;
      case Op::kConcatCols: {
        int at = 0;
        for (ValueId p : n.inputs) {
          const int w = val(p).cols();
          accum(p, [&](Tensor& d) { mmap(d) += cmap(g).middleCols(at, w); });
          at += w;
        }
        break;
      }
      case Op::kGatherRows:
        accum(n.a, [&](Tensor& d) {
          for (std::size_t i = 0; i < n.indices.size(); ++i) {
            double* dst = d.data() + static_cast<std::size_t>(n.indices[i]) * d.cols();
            const double* s = g.data() + i * g.cols();
            for (int c = 0; c < g.cols(); ++c) dst[c] += s[c];
          }
        });
        break;
      case Op::kScatterAddRows:
        accum(n.a, [&](Tensor& d) {
          for (std::size_t i = 0; i < n.indices.size(); ++i) {
            const double* s = g.data() + static_cast<std::size_t>(n.indices[i]) * g.cols();
            double* dst = d.data() + i * d.cols();
            for (int c = 0; c < g.cols(); ++c) dst[c] += s[c];
          }
        });
        break;
      case Op::kSilu:
        accum(n.a, [&](Tensor& d) {
          const Tensor& x = val(n.a);
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double s = sigmoid_scalar(x.raw()[i]);
            d.raw()[i] += g.raw()[i] * s * (1.0 + x.raw()[i] * (1.0 - s));
          }
        });
        break;
      case Op::kSigmoid:
        accum(n.a, [&](Tensor& d) {
          for (std::size_t i = 0; i < n.value.size(); ++i) {
            const double s = n.value.raw()[i];
            d.raw()[i] += g.raw()[i] * s * (1.0 - s);
          }
        });
        break;
      case Op::kVnorm:
        accum(n.a, [&](Tensor& d) {
          const Tensor& x = val(n.a);
          for (int i = 0; i < n.value.rows(); ++i) {
            for (int c = 0; c < n.value.cols(); ++c) {
              const double nv = n.value(i, c);
              if (nv == 0.0) continue;  // subgradient 0 at the origin
              const double go = g(i, c) / nv;
              for (int r = 0; r < 3; ++r) d(3 * i + r, c) += go * x(3 * i + r, c);
            }
          }
        });
        break;
      case Op::kVgate:
        accum(n.a, [&](Tensor& d) {
          const Tensor& gate = val(n.b);
          for (int i = 0; i < gate.rows(); ++i)
            for (int r = 0; r < 3; ++r)
              for (int c = 0; c < gate.cols(); ++c)
                d(3 * i + r, c) += g(3 * i + r, c) * gate(i, c);
        });
        accum(n.b, [&](Tensor& d) {
          const Tensor& x = val(n.a);
          for (int i = 0; i < d.rows(); ++i)
            for (int r = 0; r < 3; ++r)
              for (int c = 0; c < d.cols(); ++c)
                d(i, c) += g(3 * i + r, c) * x(3 * i + r, c);
        });
        break;
      case Op::kRbf:
        accum(n.a, [&](Tensor& d) {
          const Tensor& x = val(n.a);
          const RbfGrid grid = rbf_grid(n.extent, n.k);
          const double invw2 = 1.0 / (grid.width * grid.width);
          for (int i = 0; i < x.rows(); ++i) {
            double acc = 0.0;
            for (int k = 0; k < n.extent; ++k)
              acc += g(i, k) * n.value(i, k) * (-(x(i, 0) - grid.center(k)) * invw2);
            d(i, 0) += acc;
          }
        });
        break;
      case Op::kSafeRecip:
        accum(n.a, [&](Tensor& d) {
          const Tensor& x = val(n.a);
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x.raw()[i];
            if (v != 0.0) d.raw()[i] += g.raw()[i] * (-1.0 / (v * v));
          }
        });
        break;
      case Op::kSumAll:
        accum(n.a, [&](Tensor& d) {
          const double go = g(0, 0);
          for (double& v : d.raw()) v += go;
        });
        break;
      case Op::kMeanAll:
        accum(n.a, [&](Tensor& d) {
          const double go = g(0, 0) / static_cast<double>(d.size());
          for (double& v : d.raw()) v += go;
        });
        break;
      case Op::kCeMasked:
        if (n.extent > 0) {
          accum(n.a, [&](Tensor& d) {
            const Tensor& lg = val(n.a);
            const double go = g(0, 0) / n.extent;
            for (int i = 0; i < lg.rows(); ++i) {
              if (!n.mask[i]) continue;
              double mx = lg(i, 0);
              for (int c = 1; c < lg.cols(); ++c) mx = std::max(mx, lg(i, c));
              double z = 0.0;
              for (int c = 0; c < lg.cols(); ++c) z += std::exp(lg(i, c) - mx);
              for (int c = 0; c < lg.cols(); ++c) {
                const double p = std::exp(lg(i, c) - mx) / z;
                d(i, c) += go * (p - (c == n.indices[i] ? 1.0 : 0.0));
              }
            }
          });
        }
        break;
    }
  }

  GradMap out;
  for (ValueId id = 0; id < static_cast<ValueId>(nodes_.size()); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::kParam || !grads[id]) continue;
    auto [it, inserted] = out.try_emplace(n.param_name, *grads[id]);
    if (!inserted) mmap(it->second) += cmap(*grads[id]);
  }
  return out;
}

std::vector<GradCheckReport> grad_check(
    const std::function<double(const ParamStore&)>& value_fn,
    const std::function<GradMap(const ParamStore&)>& grad_fn,
    ParamStore& params, double h, double tol) {
  const GradMap analytic = grad_fn(params);
  std::vector<GradCheckReport> report;
  report.reserve(params.size());
  for (auto& [name, tensor] : params.items()) {
    GradCheckReport entry;
    entry.block = name;
    const Tensor* ga = nullptr;
    if (auto it = analytic.find(name); it != analytic.end()) ga = &it->second;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor.raw()[i];
      tensor.raw()[i] = saved + h;
      const double fp = value_fn(params);
      tensor.raw()[i] = saved - h;
      const double fm = value_fn(params);
      tensor.raw()[i] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = ga ? ga->raw()[i] : 0.0;
      const double dev = std::abs(an - fd) / (std::abs(an) + 1e-8);
      entry.max_rel_dev = std::max(entry.max_rel_dev, dev);
    }
    entry.ok = entry.max_rel_dev < tol;
    report.push_back(std::move(entry));
  }
  return report;
}

}  // namespace ligflow::ad
