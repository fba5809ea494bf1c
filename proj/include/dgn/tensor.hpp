#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace dgn {

using Shape = std::vector<int>;

std::int64_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// F32 runs accumulate in double and round at every store; F64 is the
// gradient-check mode with no rounding.
enum class Precision { kF32, kF64 };

Precision current_precision();

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision prev_;
};

inline double store_round(double v, Precision p) {
  return p == Precision::kF32 ? static_cast<double>(static_cast<float>(v)) : v;
}

class Tape;

struct TensorData {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until gradients flow
  bool requires_grad = false;
  const Tape* tape = nullptr;  // tape that produced this tensor, if any

  std::vector<double>& grad_buf();  // allocates zeros on first use
};

// Shared-storage handle; rank <= 4, row-major, last axis fastest.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return data_ != nullptr; }
  const Shape& shape() const { return data_->shape; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_->values.size()); }
  int dim(int i) const { return data_->shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(data_->shape.size()); }

  std::vector<double>& values() { return data_->values; }
  const std::vector<double>& values() const { return data_->values; }
  double item() const;

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool rg) { data_->requires_grad = rg; }
  bool has_grad() const { return !data_->grad.empty(); }
  std::vector<double>& grad() { return data_->grad_buf(); }
  const std::vector<double>& grad_view() const { return data_->grad; }
  void zero_grad() { data_->grad.clear(); }

  Tensor clone() const;  // deep copy of values; grad not copied

  std::shared_ptr<TensorData> impl() const { return data_; }
  static Tensor wrap(std::shared_ptr<TensorData> d);

 private:
  std::shared_ptr<TensorData> data_;
};

// Reverse-mode tape. Ops record onto the active tape when any input
// requires a gradient; backward() replays the rules once, in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  void record(std::function<void()> rule);
  std::size_t num_nodes() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Seeds d(loss)/d(loss)=1 and accumulates into every reachable grad
  // buffer. Throws std::logic_error on a detached loss or a second call.
  void backward(const Tensor& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  bool consumed_ = false;
};

// True when the active tape should record an op over these inputs.
bool tracing(std::initializer_list<const Tensor*> inputs);

}  // namespace dgn
