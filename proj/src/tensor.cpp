#include "urveda/tensor.h"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace urveda {

namespace {

thread_local Tape* g_active_tape = nullptr;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

std::vector<std::size_t> row_major_strides(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Strides of `in` viewed through the broadcast shape `out` (0 on broadcast axes).
std::vector<std::size_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<std::size_t> result(out.size(), 0);
  const auto in_strides = row_major_strides(in);
  const std::size_t offset = out.size() - in.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != 1 || out[offset + i] == 1) result[offset + i] = in_strides[i];
  }
  return result;
}

// Calls f(out_index, a_index, b_index) for every element of `out`.
template <typename F>
void for_each_broadcast(const Shape& out, const std::vector<std::size_t>& sa,
                        const std::vector<std::size_t>& sb, F&& f) {
  const std::size_t n = shape_numel(out);
  const std::size_t rank = out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0;
  std::size_t ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    f(i, ia, ib);
    for (std::size_t ax = rank; ax-- > 0;) {
      ++idx[ax];
      ia += sa[ax];
      ib += sb[ax];
      if (idx[ax] < out[ax]) break;
      ia -= sa[ax] * out[ax];
      ib -= sb[ax] * out[ax];
      idx[ax] = 0;
    }
  }
}

Tensor make_output(Shape shape) { return Tensor::zeros(std::move(shape)); }

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd dfdx) {
  Tensor out = make_output(x.shape());
  auto in = x.data();
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < in.size(); ++i) o[i] = fwd(in[i]);
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [x, out, dfdx](std::span<const double> g, auto grads) {
      auto in = x.data();
      auto y = out.data();
      auto& gx = *grads[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(in[i], y[i]);
    });
  }
  return out;
}

// f(a, b) forward; da(a, b, y) and db(a, b, y) are the local partials.
template <typename Fwd, typename Da, typename Db>
Tensor binary_op(const Tensor& a, const Tensor& b, Fwd fwd, Da da, Db db) {
  Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  Tensor out = make_output(out_shape);
  auto sa = broadcast_strides(a.shape(), out_shape);
  auto sb = broadcast_strides(b.shape(), out_shape);
  {
    auto pa = a.data();
    auto pb = b.data();
    auto po = out.mutable_data();
    if (a.shape() == b.shape()) {
      for (std::size_t i = 0; i < po.size(); ++i) po[i] = fwd(pa[i], pb[i]);
    } else {
      for_each_broadcast(out_shape, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
        po[i] = fwd(pa[ia], pb[ib]);
      });
    }
  }
  if (Tape* tape = detail::recording_tape({&a, &b})) {
    tape->record(out, {a, b},
                 [a, b, out, out_shape, sa, sb, da, db](std::span<const double> g, auto grads) {
                   auto pa = a.data();
                   auto pb = b.data();
                   auto po = out.data();
                   auto* ga = grads[0];
                   auto* gb = grads[1];
                   for_each_broadcast(out_shape, sa, sb,
                                      [&](std::size_t i, std::size_t ia, std::size_t ib) {
                                        if (ga) (*ga)[ia] += g[i] * da(pa[ia], pb[ib], po[i]);
                                        if (gb) (*gb)[ib] += g[i] * db(pa[ia], pb[ib], po[i]);
                                      });
                 });
  }
  return out;
}

std::size_t product(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t p = 1;
  for (std::size_t i = begin; i < end; ++i) p *= s[i];
  return p;
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------- Tensor

Tensor::Tensor(Shape shape, std::vector<double> data) : node_(std::make_shared<detail::Node>()) {
  for (std::size_t extent : shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("shape " + shape_str(shape) + " needs " + std::to_string(shape_numel(shape)) +
                     " values, got " + std::to_string(data.size()));
  }
  node_->shape = std::move(shape);
  node_->data = std::move(data);
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }
Tensor Tensor::ones(Shape shape) { return full(std::move(shape), 1.0); }
Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}
Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

detail::Node& Tensor::checked() const {
  if (!node_) throw AutodiffError("use of an undefined tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked().data.size(); }
std::span<const double> Tensor::data() const { return checked().data; }

std::span<double> Tensor::mutable_data() {
  auto& n = checked();
  if (n.recorded) throw AutodiffError("cannot mutate the output of a recorded operation");
  return n.data;
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return data()[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw ShapeError("index rank does not match " + shape_str(s));
  std::size_t offset = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw ShapeError("index out of range for " + shape_str(s));
    offset = offset * s[axis] + i;
    ++axis;
  }
  return data()[offset];
}

bool Tensor::requires_grad() const { return checked().requires_grad; }

Tensor& Tensor::set_requires_grad(bool flag) {
  auto& n = checked();
  if (n.recorded) throw AutodiffError("requires_grad can only be set on leaf tensors");
  n.requires_grad = flag;
  return *this;
}

bool Tensor::is_leaf() const { return !checked().recorded; }
bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const {
  auto& n = checked();
  if (n.grad.empty()) throw AutodiffError("tensor has no gradient");
  return n.grad;
}

std::span<double> Tensor::mutable_grad() {
  auto& n = checked();
  if (n.grad.empty()) throw AutodiffError("tensor has no gradient");
  return n.grad;
}

void Tensor::zero_grad() {
  auto& n = checked();
  n.grad.assign(n.data.size(), 0.0);
}

void Tensor::clear_grad() { checked().grad.clear(); }

Tensor Tensor::detach() const { return Tensor(shape(), checked().data); }

bool Tensor::all_finite() const {
  const auto d = data();
  return std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(std::string_view where) const {
  const auto d = data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw NumericError("non-finite value " + std::to_string(d[i]) + " at element " +
                         std::to_string(i) + " of " + std::string(where));
    }
  }
}

// ---------------------------------------------------------------- Tape

Tape::Tape() : token_(std::make_shared<detail::TapeToken>()) { token_->tape = this; }

Tape::~Tape() {
  token_->tape = nullptr;
  if (g_active_tape == this) g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const Tensor& output, std::vector<Tensor> inputs, BackwardFn fn) {
  if (consumed_) {
    throw AutodiffError(
        "tape already consumed by backward(); call reset() before recording new operations");
  }
  auto& node = output.checked();
  node.requires_grad = true;
  node.recorded = true;
  node.producer = token_;
  Entry entry;
  entry.output = output.node_;
  entry.inputs.reserve(inputs.size());
  for (auto& t : inputs) entry.inputs.push_back(t.node_);
  entry.fn = std::move(fn);
  entries_.push_back(std::move(entry));
}

void Tape::backward(const Tensor& loss) {
  auto& root = loss.checked();
  if (root.data.size() != 1) {
    throw AutodiffError("backward() needs a scalar loss, got shape " + shape_str(root.shape));
  }
  auto producer = root.producer.lock();
  if (!root.recorded || !producer || producer.get() != token_.get()) {
    throw AutodiffError("backward() on a tensor that is not part of this tape's graph");
  }
  if (consumed_) throw AutodiffError("backward() called twice without resetting the tape");
  consumed_ = true;

  root.grad.assign(1, 1.0);
  std::vector<std::vector<double>*> sinks;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    auto& out = *it->output;
    if (out.grad.empty()) continue;  // not reachable from the loss
    sinks.assign(it->inputs.size(), nullptr);
    for (std::size_t i = 0; i < it->inputs.size(); ++i) {
      auto& in = *it->inputs[i];
      if (!in.requires_grad) continue;
      if (in.grad.empty()) in.grad.assign(in.data.size(), 0.0);
      sinks[i] = &in.grad;
    }
    it->fn(out.grad, sinks);
  }
}

void Tape::reset() {
  entries_.clear();
  token_->tape = nullptr;
  token_ = std::make_shared<detail::TapeToken>();
  token_->tape = this;
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

void backward(const Tensor& loss) {
  if (!loss.defined()) throw AutodiffError("backward() on an undefined tensor");
  auto producer = loss.node()->producer.lock();
  if (!loss.node()->recorded || !producer || producer->tape == nullptr) {
    throw AutodiffError("backward() on a detached tensor (no active tape recorded it)");
  }
  producer->tape->backward(loss);
}

namespace detail {

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return g_active_tape;
  }
  return nullptr;
}

Tape* recording_tape(std::span<const Tensor> inputs) {
  if (g_active_tape == nullptr) return nullptr;
  for (const Tensor& t : inputs) {
    if (t.requires_grad()) return g_active_tape;
  }
  return nullptr;
}

}  // namespace detail

// ---------------------------------------------------------------- elementwise

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("shapes " + shape_str(a) + " and " + shape_str(b) +
                       " are not broadcast-compatible");
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_op(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double value) {
  return unary_op(
      x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

// ---------------------------------------------------------------- matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  const bool batched = sa.size() == 3 && sb.size() == 3;
  if (!batched && !(sa.size() == 2 && sb.size() == 2)) {
    throw ShapeError("matmul needs two matrices or two equal-batch stacks, got " + shape_str(sa) +
                     " and " + shape_str(sb));
  }
  const std::size_t batch = batched ? sa[0] : 1;
  const std::size_t off = batched ? 1 : 0;
  if (batched && sb[0] != batch) {
    throw ShapeError("matmul batch mismatch: " + shape_str(sa) + " vs " + shape_str(sb));
  }
  const std::size_t m = sa[off], k = sa[off + 1], n = sb[off + 1];
  if (sb[off] != k) {
    throw ShapeError("matmul inner dimension mismatch: " + shape_str(sa) + " vs " + shape_str(sb));
  }
  Tensor out = make_output(batched ? Shape{batch, m, n} : Shape{m, n});
  {
    auto pa = a.data();
    auto pb = b.data();
    auto po = out.mutable_data();
    for (std::size_t i = 0; i < batch; ++i) {
      ConstMatMap ma(pa.data() + i * m * k, m, k);
      ConstMatMap mb(pb.data() + i * k * n, k, n);
      MatMap mo(po.data() + i * m * n, m, n);
      mo.noalias() = ma * mb;
    }
  }
  if (Tape* tape = detail::recording_tape({&a, &b})) {
    tape->record(out, {a, b}, [a, b, batch, m, k, n](std::span<const double> g, auto grads) {
      auto pa = a.data();
      auto pb = b.data();
      for (std::size_t i = 0; i < batch; ++i) {
        ConstMatMap mg(g.data() + i * m * n, m, n);
        if (grads[0]) {
          ConstMatMap mb(pb.data() + i * k * n, k, n);
          MatMap ga(grads[0]->data() + i * m * k, m, k);
          ga.noalias() += mg * mb.transpose();
        }
        if (grads[1]) {
          ConstMatMap ma(pa.data() + i * m * k, m, k);
          MatMap gb(grads[1]->data() + i * k * n, k, n);
          gb.noalias() += ma.transpose() * mg;
        }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& x) {
  const auto& s = x.shape();
  if (s.size() < 2) throw ShapeError("transpose needs rank >= 2, got " + shape_str(s));
  const std::size_t rows = s[s.size() - 2];
  const std::size_t cols = s[s.size() - 1];
  const std::size_t batch = product(s, 0, s.size() - 2);
  Shape out_shape = s;
  std::swap(out_shape[s.size() - 2], out_shape[s.size() - 1]);
  Tensor out = make_output(out_shape);
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = px.data() + b * rows * cols;
    double* dst = po.data() + b * rows * cols;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [batch, rows, cols](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      for (std::size_t b = 0; b < batch; ++b) {
        const double* src = g.data() + b * rows * cols;
        double* dst = gx.data() + b * rows * cols;
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) dst[r * cols + c] += src[c * rows + r];
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------- reductions

Tensor reduce(const Tensor& x, ReduceOp op, std::vector<std::size_t> axes, bool keepdims) {
  const Shape& in_shape = x.shape();
  const std::size_t rank = in_shape.size();
  std::vector<bool> reduced(rank, axes.empty());
  for (std::size_t ax : axes) {
    if (ax >= rank) {
      throw ShapeError("invalid reduction axis " + std::to_string(ax) + " for shape " +
                       shape_str(in_shape));
    }
    reduced[ax] = true;
  }
  Shape kept_shape(rank);
  Shape out_shape;
  for (std::size_t i = 0; i < rank; ++i) {
    kept_shape[i] = reduced[i] ? 1 : in_shape[i];
    if (!reduced[i] || keepdims) out_shape.push_back(kept_shape[i]);
  }
  const std::size_t count = shape_numel(in_shape) / shape_numel(kept_shape);

  // Map every input element to its output slot.
  auto kept_strides = row_major_strides(kept_shape);
  for (std::size_t i = 0; i < rank; ++i)
    if (reduced[i]) kept_strides[i] = 0;
  const std::size_t n_in = x.numel();
  std::vector<std::size_t> target(n_in);
  {
    std::vector<std::size_t> zero(rank, 0);
    for_each_broadcast(in_shape, kept_strides, zero,
                       [&](std::size_t i, std::size_t o, std::size_t) { target[i] = o; });
  }

  const std::size_t n_out = shape_numel(kept_shape);
  Tensor out = make_output(out_shape);
  auto px = x.data();
  auto po = out.mutable_data();
  std::vector<std::size_t> argmax;
  if (op == ReduceOp::kMax) {
    std::fill(po.begin(), po.end(), -std::numeric_limits<double>::infinity());
    argmax.assign(n_out, 0);
    std::vector<bool> seen(n_out, false);
    for (std::size_t i = 0; i < n_in; ++i) {
      const std::size_t o = target[i];
      if (!seen[o] || px[i] > po[o]) {
        po[o] = px[i];
        argmax[o] = i;
        seen[o] = true;
      }
    }
  } else {
    for (std::size_t i = 0; i < n_in; ++i) po[target[i]] += px[i];
    if (op == ReduceOp::kMean)
      for (auto& v : po) v /= static_cast<double>(count);
  }

  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x},
                 [op, target = std::move(target), argmax = std::move(argmax), count](
                     std::span<const double> g, auto grads) {
                   auto& gx = *grads[0];
                   if (op == ReduceOp::kMax) {
                     for (std::size_t o = 0; o < argmax.size(); ++o) gx[argmax[o]] += g[o];
                   } else {
                     const double f = op == ReduceOp::kMean ? 1.0 / static_cast<double>(count) : 1.0;
                     for (std::size_t i = 0; i < target.size(); ++i) gx[i] += g[target[i]] * f;
                   }
                 });
  }
  return out;
}

// ---------------------------------------------------------------- structural

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("invalid concat axis for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat shape mismatch: " + shape_str(first) + " vs " + shape_str(s));
    }
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = product(first, 0, axis);
  const std::size_t inner = product(first, axis + 1, first.size());
  const std::size_t out_row = out_shape[axis] * inner;

  Tensor out = make_output(out_shape);
  auto po = out.mutable_data();
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t row = p.dim(axis) * inner;
    auto pp = p.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(pp.data() + o * row, row, po.data() + o * out_row + offset);
    offset += row;
  }
  if (Tape* tape = detail::recording_tape(parts)) {
    std::vector<std::size_t> rows;
    for (const auto& p : parts) rows.push_back(p.dim(axis) * inner);
    tape->record(out, std::vector<Tensor>(parts.begin(), parts.end()),
                 [outer, out_row, offsets, rows](std::span<const double> g, auto grads) {
                   for (std::size_t k = 0; k < grads.size(); ++k) {
                     if (!grads[k]) continue;
                     auto& gk = *grads[k];
                     for (std::size_t o = 0; o < outer; ++o) {
                       const double* src = g.data() + o * out_row + offsets[k];
                       double* dst = gk.data() + o * rows[k];
                       for (std::size_t i = 0; i < rows[k]; ++i) dst[i] += src[i];
                     }
                   }
                 });
  }
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor narrow(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& s = x.shape();
  if (axis >= s.size() || length == 0 || start + length > s[axis]) {
    throw ShapeError("narrow(" + std::to_string(axis) + ", " + std::to_string(start) + ", " +
                     std::to_string(length) + ") out of range for " + shape_str(s));
  }
  Shape out_shape = s;
  out_shape[axis] = length;
  const std::size_t outer = product(s, 0, axis);
  const std::size_t inner = product(s, axis + 1, s.size());
  const std::size_t in_row = s[axis] * inner;
  const std::size_t out_row = length * inner;
  const std::size_t skip = start * inner;
  Tensor out = make_output(out_shape);
  auto px = x.data();
  auto po = out.mutable_data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(px.data() + o * in_row + skip, out_row, po.data() + o * out_row);
  if (Tape* tape = detail::recording_tape({&x})) {
    tape->record(out, {x}, [outer, in_row, out_row, skip](std::span<const double> g, auto grads) {
      auto& gx = *grads[0];
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < out_row; ++i) gx[o * in_row + skip + i] += g[o * out_row + i];
    });
  }
  return out;
}

}  // namespace urveda
