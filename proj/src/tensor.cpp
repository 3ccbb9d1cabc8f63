#include "feta/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feta/errors.h"

namespace feta {

namespace {

thread_local Tape* g_active_tape = nullptr;

#ifdef NDEBUG
bool g_finite_checks = false;
#else
bool g_finite_checks = true;
#endif

std::size_t product(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(product(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (product(shape) != values.size()) {
    throw DimensionError("Tensor::from: shape " + shape_str(shape) + " needs " +
                         std::to_string(product(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return from({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

Tensor Tensor::eye(std::size_t n) {
  Tensor t = zeros({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  if (dim() == 1) return 1;
  if (dim() == 2) return shape()[0];
  throw DimensionError("rows(): expected 1-D or 2-D tensor, got " + shape_str(shape()));
}

std::size_t Tensor::cols() const {
  if (dim() == 1) return shape()[0];
  if (dim() == 2) return shape()[1];
  throw DimensionError("cols(): expected 1-D or 2-D tensor, got " + shape_str(shape()));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item(): tensor of shape " + shape_str(shape()) + " is not a scalar");
  }
  return impl_->data[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return impl_->grad;
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->grad = impl_->grad;
  impl->requires_grad = impl_->requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::detach() const {
  return from(impl_->shape, impl_->data, false);
}

void Tape::record(std::shared_ptr<TensorImpl> node) {
  if (consumed_) {
    throw ContractError("Tape::record: tape was replayed; call clear() before the next forward pass");
  }
  nodes_.push_back(std::move(node));
}

void Tape::backward(const Tensor& output) {
  if (!output.defined() || output.numel() != 1) {
    throw ContractError("backward: output must be a scalar, got " +
                        (output.defined() ? shape_str(output.shape()) : std::string("undefined")));
  }
  if (consumed_) throw ContractError("backward: tape already replayed");
  auto* target = output.impl();
  auto it = std::find_if(nodes_.rbegin(), nodes_.rend(),
                         [&](const auto& n) { return n.get() == target; });
  if (it == nodes_.rend()) {
    throw ContractError("backward: output was not recorded on this tape");
  }
  target->ensure_grad();
  target->grad[0] += 1.0;
  for (; it != nodes_.rend(); ++it) {
    TensorImpl& node = **it;
    if (node.grad.empty() || !node.backward_fn) continue;
    node.backward_fn(node);
  }
  consumed_ = true;
}

void Tape::clear() {
  nodes_.clear();
  consumed_ = false;
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& output) {
  if (g_active_tape == nullptr) throw ContractError("backward: no active tape");
  g_active_tape->backward(output);
}

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }

Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                   std::function<void(TensorImpl&)> backward_fn) {
  if (g_finite_checks) {
    for (double v : data) {
      if (!std::isfinite(v)) {
        throw NumericalError("non-finite value produced in tensor of shape " + shape_str(shape));
      }
    }
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  const bool track =
      g_active_tape != nullptr &&
      std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (track) {
    impl->requires_grad = true;
    impl->parents.reserve(parents.size());
    for (auto& p : parents) impl->parents.push_back(p.impl_ptr());
    impl->backward_fn = std::move(backward_fn);
    g_active_tape->record(impl);
  }
  return Tensor(std::move(impl));
}

}  // namespace feta
