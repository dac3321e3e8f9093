#pragma once

// Dense row-major matrices with a reverse-mode tape and Adam.
//
// A Tape records every operation as it is executed, so creation order is a
// topological order and backward() is a single reverse sweep. Parameters are
// bound to a tape by reference: the tape never copies or mutates them, which
// lets independent tapes share one set of weights.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace steiner {

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Throws std::invalid_argument when data.size() != rows * cols.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::array<std::size_t, 2> shape() const { return {rows_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Tensor& t);

/// C += op(A) * op(B), where op transposes when the flag is set.
void gemm_accumulate(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& c);

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that owns its value and never receives a gradient.
  Var constant(Tensor value);
  /// Leaf that owns its value and accumulates a gradient.
  Var variable(Tensor value);
  /// Leaf that references external storage; `value` must outlive the tape.
  Var parameter(const Tensor& value, bool requires_grad = true);

  /// Reverse sweep from a 1x1 loss. Throws std::invalid_argument otherwise.
  void backward(Var loss);

  /// Gradient of the last backward(); zeros for nodes the loss never reached.
  const Tensor& grad(Var v) const;
  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id_].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  using BackwardFn =
      std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;
  /// Appends an op result. `backward` receives the op's output and upstream
  /// gradient and must route it into the parents via accumulate() or
  /// grad_buffer(). Throws std::domain_error when `value` contains NaN or
  /// infinity.
  Var record(Tensor value, bool requires_grad, BackwardFn backward, const char* op);

  /// Adds `g` into the gradient buffer of `v` (allocating it on first use).
  void accumulate(Var v, const Tensor& g);
  /// Mutable gradient buffer of `v`, zero-initialized on first use.
  Tensor& grad_buffer(Var v);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
    const Tensor& value() const { return external ? *external : owned; }
  };
  std::vector<Node> nodes_;
};

// Differentiable ops. Every op throws std::invalid_argument on a shape
// mismatch and std::domain_error if the result is not finite.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
/// x[r, c] + bias[c]; bias is any tensor holding x.cols() entries.
Var add_bias(Var x, Var bias);
Var scale(Var x, double s);
Var relu(Var x);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);
/// Per-column normalization over the rows, then gain/bias (each x.cols()
/// entries). Requires at least 2 rows.
Var batch_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var mean_rows(Var x);
Var gather_rows(Var x, std::span<const std::size_t> rows);
Var gather_cols(Var x, std::span<const std::size_t> cols);
Var concat_rows(Var a, Var b);
Var concat_cols(Var a, Var b);
/// 1x1 view of x[r, c].
Var element(Var x, std::size_t r, std::size_t c);
Var sum(Var x);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// One bias-corrected Adam update. Moment buffers are created on the first
/// call; throws std::invalid_argument when shapes disagree.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state);

}  // namespace steiner
