#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace semigen {

class Tape;

/// Thrown when operand shapes do not fit an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for values outside an operation's domain (e.g. log of 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a caller breaks an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  // Position on the owning tape; -1 for leaves and untracked values.
  std::int64_t tape_index = -1;
  const Tape* tape = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

}  // namespace detail

/// Dense row-major matrix of doubles. Copies share storage; use clone() for
/// an independent value. A tensor produced by an operation while a Tape is
/// active (and with at least one requires_grad input) is recorded on it.
class Tensor {
 public:
  Tensor();

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double value,
                       bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->values.size(); }

  std::span<const double> values() const { return node_->values; }
  /// Direct write access, for parameter updates and initialization only.
  std::span<double> mutable_values() { return node_->values; }
  double at(std::size_t r, std::size_t c) const { return node_->values[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }
  void zero_grad();

  /// Handle of the recording on the active tape, if any.
  std::int64_t node_id() const { return node_->tape_index; }

  /// Deep copy of the values, detached from any graph.
  Tensor clone(bool requires_grad = false) const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(Shape, std::vector<double>, std::vector<Tensor>,
                            std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

/// Ordered record of executed operations for one training step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded adjoint in reverse.
  void backward(const Tensor& loss);

  std::size_t size() const { return ops_.size(); }
  void record(const std::shared_ptr<detail::Node>& node);

 private:
  std::vector<std::shared_ptr<detail::Node>> ops_;
};

/// Makes a tape the active recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording for the current thread (inference inside a step).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Builds an operation result; records it when any input needs a gradient.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(detail::Node&)> backward);

// --- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);

/// a (m x n) plus bias (1 x n) broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& bias);
/// Scales row i of a (m x n) by s(i, 0), s is m x 1.
Tensor scale_rows(const Tensor& a, const Tensor& s);

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);

Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);

/// Gathers table rows. Backward scatters additively.
Tensor lookup(const Tensor& table, std::span<const int> ids);

/// Inverted dropout: survivors scaled by 1/(1-rate); identity when !training.
Tensor dropout(const Tensor& a, double rate, bool training, std::mt19937_64& rng);

Tensor sum(const Tensor& a);

/// sum_i weights[i] * a(i, ids[i]); rows whose id is negative are skipped.
Tensor weighted_pick_sum(const Tensor& a, std::span<const int> ids,
                         std::span<const double> weights);

/// Batched dot against a position-major memory. query is B x d, memory is
/// (T*B) x d with row t*B + b holding position t of batch element b.
/// Result is B x T with (b, t) = <query_b, memory_{t,b}>.
Tensor seq_dot(const Tensor& query, const Tensor& memory);

/// Inverse of seq_dot's layout: weights B x T, memory (T*B) x d, result B x d
/// with row b = sum_t weights(b, t) * memory_{t,b}.
Tensor seq_mix(const Tensor& weights, const Tensor& memory);

// --- optimization ----------------------------------------------------------

/// Global L2 norm of the gradients of params.
double grad_norm(std::span<const Tensor> params);

/// Clips to clip_norm (global norm), applies p -= lr * grad and zeroes grads.
/// Returns the pre-clip gradient norm.
double sgd_step(std::span<Tensor> params, double lr, double clip_norm);

}  // namespace semigen
