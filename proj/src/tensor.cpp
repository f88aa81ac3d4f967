#include "semigen/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace semigen {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

thread_local Tape* g_active_tape = nullptr;

ConstMatMap view(const std::vector<double>& v, const Shape& s) {
  return ConstMatMap(v.data(), static_cast<Eigen::Index>(s.rows),
                     static_cast<Eigen::Index>(s.cols));
}

MatMap view(std::vector<double>& v, const Shape& s) {
  return MatMap(v.data(), static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

// Applies f(x) elementwise; the adjoint is grad * df(x, y) with y = f(x).
template <typename F, typename DF>
Tensor unary(const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), {a}, [df](detail::Node& self) {
    auto& x = *self.inputs[0];
    if (!x.requires_grad) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      x.grad[i] += self.grad[i] * df(x.values[i], self.values[i]);
    }
  });
}

}  // namespace

std::string Shape::str() const {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  return filled(rows, cols, 0.0, requires_grad);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double value, bool requires_grad) {
  return from(rows, cols, std::vector<double>(rows * cols, value), requires_grad);
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> values,
                    bool requires_grad) {
  if (values.size() != rows * cols) {
    throw DimensionError("Tensor::from: " + std::to_string(values.size()) +
                         " values for shape " + Shape{rows, cols}.str());
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = {rows, cols};
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->values.size(), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from(1, 1, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape().str());
  return node_->values[0];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const {
  return from(rows(), cols(), node_->values, requires_grad);
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() { g_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(g_active_tape) { g_active_tape = nullptr; }

NoGradScope::~NoGradScope() { g_active_tape = previous_; }

void Tape::record(const std::shared_ptr<detail::Node>& node) {
  node->tape_index = static_cast<std::int64_t>(ops_.size());
  node->tape = this;
  ops_.push_back(node);
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be scalar, got " + loss.shape().str());
  }
  const auto& root = loss.node();
  if (root->tape != this || root->tape_index < 0) {
    throw ContractError("backward: loss is not recorded on this tape");
  }
  root->grad[0] += 1.0;
  std::vector<char> reached(ops_.size(), 0);
  reached[static_cast<std::size_t>(root->tape_index)] = 1;
  for (auto i = root->tape_index; i >= 0; --i) {
    auto idx = static_cast<std::size_t>(i);
    if (!reached[idx]) continue;
    auto& node = *ops_[idx];
    if (node.backward) node.backward(node);
    for (const auto& in : node.inputs) {
      if (in->requires_grad && in->tape == this && in->tape_index >= 0) {
        reached[static_cast<std::size_t>(in->tape_index)] = 1;
      }
    }
  }
}

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape;
  node->values = std::move(values);
  Tape* tape = g_active_tape;
  bool needs_grad = tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                                   [](const Tensor& t) { return t.requires_grad(); });
  if (needs_grad) {
    node->requires_grad = true;
    node->grad.assign(node->values.size(), 0.0);
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
    tape->record(node);
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + a.shape().str() + " x " +
                         b.shape().str());
  }
  Shape out_shape{a.rows(), b.cols()};
  std::vector<double> out(out_shape.size());
  view(out, out_shape).noalias() = view(a.node()->values, a.shape()) * view(b.node()->values, b.shape());
  return make_result(out_shape, std::move(out), {a, b}, [](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    auto g = view(std::as_const(self.grad), self.shape);
    if (x.requires_grad) {
      view(x.grad, x.shape).noalias() += g * view(std::as_const(y.values), y.shape).transpose();
    }
    if (y.requires_grad) {
      view(y.grad, y.shape).noalias() += view(std::as_const(x.values), x.shape).transpose() * g;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (x.requires_grad) x.grad[i] += self.grad[i];
      if (y.requires_grad) y.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (x.requires_grad) x.grad[i] += self.grad[i] * y.values[i];
      if (y.requires_grad) y.grad[i] += self.grad[i] * x.values[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    throw DimensionError("add_row: bias " + bias.shape().str() + " does not fit " +
                         a.shape().str());
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const std::size_t n = a.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias.values()[c];
  }
  return make_result(a.shape(), std::move(out), {a, bias}, [n](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& b = *self.inputs[1];
    if (x.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) x.grad[i] += self.grad[i];
    }
    if (b.requires_grad) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) b.grad[i % n] += self.grad[i];
    }
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
  if (s.rows() != a.rows() || s.cols() != 1) {
    throw DimensionError("scale_rows: scales " + s.shape().str() + " do not fit " +
                         a.shape().str());
  }
  const std::size_t n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a.values()[r * n + c] * s.values()[r];
  }
  return make_result(a.shape(), std::move(out), {a, s}, [n](detail::Node& self) {
    auto& x = *self.inputs[0];
    auto& k = *self.inputs[1];
    for (std::size_t r = 0; r < self.shape.rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double g = self.grad[r * n + c];
        if (x.requires_grad) x.grad[r * n + c] += g * k.values[r];
        if (k.requires_grad) k.grad[r] += g * x.values[r * n + c];
      }
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row count mismatch " + parts.front().shape().str() +
                           " vs " + p.shape().str());
    }
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.values().begin() + static_cast<std::ptrdiff_t>(r * p.cols()), p.cols(),
                  out.begin() + static_cast<std::ptrdiff_t>(r * cols + off));
    }
    off += p.cols();
  }
  return make_result({rows, cols}, std::move(out), {parts.begin(), parts.end()},
                     [offsets, cols](detail::Node& self) {
                       for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                         auto& in = *self.inputs[k];
                         if (!in.requires_grad) continue;
                         const std::size_t w = in.shape.cols;
                         for (std::size_t r = 0; r < in.shape.rows; ++r) {
                           for (std::size_t c = 0; c < w; ++c) {
                             in.grad[r * w + c] += self.grad[r * cols + offsets[k] + c];
                           }
                         }
                       }
                     });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column count mismatch " + parts.front().shape().str() +
                           " vs " + p.shape().str());
    }
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return make_result({rows, cols}, std::move(out), {parts.begin(), parts.end()},
                     [](detail::Node& self) {
                       std::size_t off = 0;
                       for (auto& in : self.inputs) {
                         if (in->requires_grad) {
                           for (std::size_t i = 0; i < in->grad.size(); ++i) {
                             in->grad[i] += self.grad[off + i];
                           }
                         }
                         off += in->values.size();
                       }
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + a.shape().str());
  }
  const std::size_t n = a.cols();
  std::vector<double> out(a.rows() * count);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy_n(a.values().begin() + static_cast<std::ptrdiff_t>(r * n + begin), count,
                out.begin() + static_cast<std::ptrdiff_t>(r * count));
  }
  return make_result({a.rows(), count}, std::move(out), {a},
                     [begin, count, n](detail::Node& self) {
                       auto& x = *self.inputs[0];
                       if (!x.requires_grad) return;
                       for (std::size_t r = 0; r < self.shape.rows; ++r) {
                         for (std::size_t c = 0; c < count; ++c) {
                           x.grad[r * n + begin + c] += self.grad[r * count + c];
                         }
                       }
                     });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* in = a.values().data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < n; ++c) o[c] /= z;
  }
  return make_result(a.shape(), std::move(out), {a}, [n](detail::Node& self) {
    auto& x = *self.inputs[0];
    if (!x.requires_grad) return;
    for (std::size_t r = 0; r < self.shape.rows; ++r) {
      const double* y = self.values.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[c] * y[c];
      for (std::size_t c = 0; c < n; ++c) x.grad[r * n + c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  const std::size_t n = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* in = a.values().data() + r * n;
    double* o = out.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) z += std::exp(in[c] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) o[c] = in[c] - lz;
  }
  return make_result(a.shape(), std::move(out), {a}, [n](detail::Node& self) {
    auto& x = *self.inputs[0];
    if (!x.requires_grad) return;
    for (std::size_t r = 0; r < self.shape.rows; ++r) {
      const double* y = self.values.data() + r * n;
      const double* g = self.grad.data() + r * n;
      double gsum = 0.0;
      for (std::size_t c = 0; c < n; ++c) gsum += g[c];
      for (std::size_t c = 0; c < n; ++c) x.grad[r * n + c] += g[c] - std::exp(y[c]) * gsum;
    }
  });
}

Tensor lookup(const Tensor& table, std::span<const int> ids) {
  const std::size_t d = table.cols();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw std::out_of_range("lookup: id " + std::to_string(ids[i]) + " outside table " +
                              table.shape().str());
    }
    std::copy_n(table.values().begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  std::vector<int> rows(ids.begin(), ids.end());
  return make_result({ids.size(), d}, std::move(out), {table},
                     [rows = std::move(rows), d](detail::Node& self) {
                       auto& t = *self.inputs[0];
                       if (!t.requires_grad) return;
                       for (std::size_t i = 0; i < rows.size(); ++i) {
                         const auto base = static_cast<std::size_t>(rows[i]) * d;
                         for (std::size_t c = 0; c < d; ++c) t.grad[base + c] += self.grad[i * d + c];
                       }
                     });
}

Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw ContractError("dropout: rate must be in [0, 1)");
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& m : mask) m = unit(rng) < rate ? 0.0 : keep_scale;
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * mask[i];
  return make_result(a.shape(), std::move(out), {a},
                     [mask = std::move(mask)](detail::Node& self) {
                       auto& x = *self.inputs[0];
                       if (!x.requires_grad) return;
                       for (std::size_t i = 0; i < mask.size(); ++i) x.grad[i] += self.grad[i] * mask[i];
                     });
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return make_result({1, 1}, {total}, {a}, [](detail::Node& self) {
    auto& x = *self.inputs[0];
    if (!x.requires_grad) return;
    for (auto& g : x.grad) g += self.grad[0];
  });
}

Tensor weighted_pick_sum(const Tensor& a, std::span<const int> ids,
                         std::span<const double> weights) {
  if (ids.size() != a.rows() || weights.size() != a.rows()) {
    throw DimensionError("weighted_pick_sum: " + std::to_string(ids.size()) + " ids and " +
                         std::to_string(weights.size()) + " weights for " + a.shape().str());
  }
  const std::size_t n = a.cols();
  double total = 0.0;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0) continue;
    if (static_cast<std::size_t>(ids[r]) >= n) {
      throw std::out_of_range("weighted_pick_sum: id " + std::to_string(ids[r]) +
                              " outside " + a.shape().str());
    }
    total += weights[r] * a.values()[r * n + static_cast<std::size_t>(ids[r])];
  }
  std::vector<int> picked(ids.begin(), ids.end());
  std::vector<double> w(weights.begin(), weights.end());
  return make_result({1, 1}, {total}, {a},
                     [picked = std::move(picked), w = std::move(w), n](detail::Node& self) {
                       auto& x = *self.inputs[0];
                       if (!x.requires_grad) return;
                       for (std::size_t r = 0; r < picked.size(); ++r) {
                         if (picked[r] < 0) continue;
                         x.grad[r * n + static_cast<std::size_t>(picked[r])] += self.grad[0] * w[r];
                       }
                     });
}

Tensor seq_dot(const Tensor& query, const Tensor& memory) {
  const std::size_t batch = query.rows();
  const std::size_t d = query.cols();
  if (batch == 0 || memory.cols() != d || memory.rows() % batch != 0) {
    throw DimensionError("seq_dot: query " + query.shape().str() + " does not fit memory " +
                         memory.shape().str());
  }
  const std::size_t steps = memory.rows() / batch;
  std::vector<double> out(batch * steps);
  const double* q = query.values().data();
  const double* m = memory.values().data();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double* row = m + (t * batch + b) * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += q[b * d + k] * row[k];
      out[b * steps + t] = acc;
    }
  }
  return make_result({batch, steps}, std::move(out), {query, memory},
                     [batch, steps, d](detail::Node& self) {
                       auto& q = *self.inputs[0];
                       auto& mem = *self.inputs[1];
                       for (std::size_t t = 0; t < steps; ++t) {
                         for (std::size_t b = 0; b < batch; ++b) {
                           const double g = self.grad[b * steps + t];
                           if (g == 0.0) continue;
                           const std::size_t row = (t * batch + b) * d;
                           for (std::size_t k = 0; k < d; ++k) {
                             if (q.requires_grad) q.grad[b * d + k] += g * mem.values[row + k];
                             if (mem.requires_grad) mem.grad[row + k] += g * q.values[b * d + k];
                           }
                         }
                       }
                     });
}

Tensor seq_mix(const Tensor& weights, const Tensor& memory) {
  const std::size_t batch = weights.rows();
  const std::size_t steps = weights.cols();
  const std::size_t d = memory.cols();
  if (memory.rows() != batch * steps) {
    throw DimensionError("seq_mix: weights " + weights.shape().str() + " do not fit memory " +
                         memory.shape().str());
  }
  std::vector<double> out(batch * d, 0.0);
  const double* w = weights.values().data();
  const double* m = memory.values().data();
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const double a = w[b * steps + t];
      const double* row = m + (t * batch + b) * d;
      for (std::size_t k = 0; k < d; ++k) out[b * d + k] += a * row[k];
    }
  }
  return make_result({batch, d}, std::move(out), {weights, memory},
                     [batch, steps, d](detail::Node& self) {
                       auto& w = *self.inputs[0];
                       auto& mem = *self.inputs[1];
                       for (std::size_t t = 0; t < steps; ++t) {
                         for (std::size_t b = 0; b < batch; ++b) {
                           const std::size_t row = (t * batch + b) * d;
                           const double* g = self.grad.data() + b * d;
                           if (w.requires_grad) {
                             double acc = 0.0;
                             for (std::size_t k = 0; k < d; ++k) acc += g[k] * mem.values[row + k];
                             w.grad[b * steps + t] += acc;
                           }
                           if (mem.requires_grad) {
                             const double a = w.values[b * steps + t];
                             for (std::size_t k = 0; k < d; ++k) mem.grad[row + k] += a * g[k];
                           }
                         }
                       }
                     });
}

double grad_norm(std::span<const Tensor> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double sgd_step(std::span<Tensor> params, double lr, double clip_norm) {
  const double norm = grad_norm(params);
  double factor = lr;
  if (clip_norm > 0.0 && norm > clip_norm) factor *= clip_norm / norm;
  for (auto& p : params) {
    auto v = p.mutable_values();
    auto g = p.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) v[i] -= factor * g[i];
    p.zero_grad();
  }
  return norm;
}

}  // namespace semigen
