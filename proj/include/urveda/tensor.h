#pragma once

// Dense row-major float64 tensors with reverse-mode automatic differentiation.
//
// Operations record themselves on the thread's active Tape (see TapeScope)
// whenever at least one input requires a gradient. Without an active tape
// every operation is a plain forward computation. A tape can be consumed by
// exactly one backward pass; it must be reset before it records again.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urveda/errors.h"

namespace urveda {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tape;

namespace detail {

struct TapeToken {
  Tape* tape = nullptr;
};

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  // Non-empty for tensors produced by an operation recorded on a tape. The
  // token expires when that tape is reset or destroyed.
  std::weak_ptr<TapeToken> producer;
  bool recorded = false;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Direct write access, used by optimizers and initializers. Only valid for
  // leaf tensors (never for outputs of recorded operations).
  std::span<double> mutable_data();
  double item() const;
  double at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool flag);
  bool is_leaf() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  // Copy of the values with no gradient tracking.
  Tensor detach() const;

  bool all_finite() const;
  // Throws NumericError mentioning `where` if any value is NaN or Inf.
  void check_finite(std::string_view where) const;

  bool same_storage(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  detail::Node& checked() const;

  std::shared_ptr<detail::Node> node_;
  friend class Tape;
};

// Receives the gradient of the recorded output and accumulates into the
// gradient buffers of its inputs. A null buffer means that input does not
// require a gradient.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<std::vector<double>* const> grad_in)>;

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const Tensor& output, std::vector<Tensor> inputs, BackwardFn fn);
  void backward(const Tensor& loss);
  // Drops the recorded graph. Tensors produced before the reset become
  // detached and can no longer be differentiated.
  void reset();

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  // The tape operations record onto in the current thread, or null.
  static Tape* active();

 private:
  struct Entry {
    std::shared_ptr<detail::Node> output;
    std::vector<std::shared_ptr<detail::Node>> inputs;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  std::shared_ptr<detail::TapeToken> token_;
  bool consumed_ = false;
};

// Makes `tape` the active tape of this thread for the scope's lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Backpropagates from a scalar loss through the tape that produced it.
void backward(const Tensor& loss);

namespace detail {
// Active tape if any of the inputs requires a gradient, else null.
Tape* recording_tape(std::initializer_list<const Tensor*> inputs);
Tape* recording_tape(std::span<const Tensor> inputs);
}  // namespace detail

// ---- elementwise (numpy-style broadcasting) ----
Shape broadcast_shapes(const Shape& a, const Shape& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double value);
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }

// ---- linear algebra ----
// [M×K]·[K×N], or batched [B×M×K]·[B×K×N].
Tensor matmul(const Tensor& a, const Tensor& b);
// Swaps the last two axes.
Tensor transpose(const Tensor& x);

// ---- reductions ----
enum class ReduceOp { kSum, kMean, kMax };

// Reduces over `axes` (all axes when empty). Max routes its gradient to the
// first maximal element in row-major order.
Tensor reduce(const Tensor& x, ReduceOp op, std::vector<std::size_t> axes = {},
              bool keepdims = false);
inline Tensor sum(const Tensor& x, std::vector<std::size_t> axes = {}, bool keepdims = false) {
  return reduce(x, ReduceOp::kSum, std::move(axes), keepdims);
}
inline Tensor mean(const Tensor& x, std::vector<std::size_t> axes = {}, bool keepdims = false) {
  return reduce(x, ReduceOp::kMean, std::move(axes), keepdims);
}
inline Tensor max(const Tensor& x, std::vector<std::size_t> axes = {}, bool keepdims = false) {
  return reduce(x, ReduceOp::kMax, std::move(axes), keepdims);
}

// ---- structural ----
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
// Slice [start, start+length) along `axis`.
Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

}  // namespace urveda
