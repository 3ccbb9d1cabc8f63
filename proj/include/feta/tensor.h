#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace feta {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  // Empty until something flows into it during backward.
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(TensorImpl&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

// Dense row-major float64 array with reverse-mode gradient support.
//
// A Tensor is a handle: copies share storage and gradient. Use clone() for a
// deep copy and detach() for a copy cut off from the computation graph.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor eye(std::size_t n);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t dim() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  // Row/column view: a 1-D tensor [n] reads as one row of n columns.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return impl_->data; }
  std::span<const double> data() const { return impl_->data; }
  double& operator()(std::size_t i, std::size_t j) { return impl_->data[i * cols() + j]; }
  double operator()(std::size_t i, std::size_t j) const { return impl_->data[i * cols() + j]; }
  double& operator[](std::size_t i) { return impl_->data[i]; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool has_grad() const { return !impl_->grad.empty(); }
  // Gradient buffer; zeros when nothing has been accumulated yet.
  std::vector<double> grad() const;
  void zero_grad() { impl_->grad.clear(); }

  Tensor clone() const;
  Tensor detach() const;

  TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<TensorImpl>& impl_ptr() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_result(Shape shape, std::vector<double> data,
                            std::vector<Tensor> parents,
                            std::function<void(TensorImpl&)> backward_fn);

  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of operations that produced grad-tracking tensors.
//
// Only operations executed while a tape is active (see TapeScope) are recorded;
// without an active tape every op result is a constant. A tape can be replayed
// backward once; clear() makes it reusable for the next step.
class Tape {
 public:
  void record(std::shared_ptr<TensorImpl> node);
  void backward(const Tensor& output);
  void clear();
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  std::vector<std::shared_ptr<TensorImpl>> nodes_;
  bool consumed_ = false;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// Backward through the active tape.
void backward(const Tensor& output);

// When enabled, every op result is scanned for NaN/Inf and NumericalError is
// thrown on the first bad value. On by default in builds without NDEBUG.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

// Used by op implementations: builds a result tensor and records it on the
// active tape when any parent tracks gradients.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents,
                   std::function<void(TensorImpl&)> backward_fn);

}  // namespace feta
