#include "dgn/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace dgn {

namespace {
thread_local Precision g_precision = Precision::kF32;
thread_local Tape* g_active_tape = nullptr;
}  // namespace

std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Precision current_precision() { return g_precision; }

PrecisionScope::PrecisionScope(Precision p) : prev_(g_precision) { g_precision = p; }
PrecisionScope::~PrecisionScope() { g_precision = prev_; }

std::vector<double>& TensorData::grad_buf() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
  return grad;
}

static void check_shape(const Shape& shape) {
  if (shape.size() > 4) {
    throw std::invalid_argument("tensor rank > 4: " + shape_str(shape));
  }
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
  }
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape(shape);
  auto d = std::make_shared<TensorData>();
  d->values.assign(static_cast<std::size_t>(numel(shape)), 0.0);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return wrap(std::move(d));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  const double v = store_round(value, current_precision());
  for (double& x : t.values()) x = v;
  return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (numel(shape) != static_cast<std::int64_t>(values.size())) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->values = std::move(values);
  d->requires_grad = requires_grad;
  return wrap(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + shape_str(shape()));
  }
  return data_->values[0];
}

Tensor Tensor::clone() const {
  auto d = std::make_shared<TensorData>();
  d->shape = data_->shape;
  d->values = data_->values;
  d->requires_grad = data_->requires_grad;
  return wrap(std::move(d));
}

Tensor Tensor::wrap(std::shared_ptr<TensorData> d) {
  Tensor t;
  t.data_ = std::move(d);
  return t;
}

Tape* Tape::active() { return g_active_tape; }

Tape::Scope::Scope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = prev_; }

void Tape::record(std::function<void()> rule) {
  nodes_.push_back(std::move(rule));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) {
    throw std::logic_error("backward() called twice on the same tape");
  }
  if (loss.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, got " +
                                shape_str(loss.shape()));
  }
  if (loss.impl()->tape != this) {
    throw std::logic_error("loss is detached from this tape");
  }
  consumed_ = true;
  loss.impl()->grad_buf()[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    (*it)();
  }
}

bool tracing(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

}  // namespace dgn
