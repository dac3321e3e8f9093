#include "steiner/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace steiner {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw std::invalid_argument("Tensor: data length does not match shape");
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

void gemm_accumulate(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& c) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb || c.rows() != m || c.cols() != n)
    throw std::invalid_argument("gemm: incompatible shapes " + shape_string(a) + " " +
                                shape_string(b) + " -> " + shape_string(c));
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = c.data().data();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();

  if (!trans_b) {
    // i-p-j order streams rows of B and C.
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = C + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? A[p * lda + i] : A[i * lda + p];
        if (av == 0.0) continue;
        const double* brow = B + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    // Dot products against rows of B.
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B + j * ldb;
        double s = 0.0;
        if (!trans_a) {
          const double* arow = A + i * lda;
          for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < k; ++p) s += A[p * lda + i] * brow[p];
        }
        crow[j] += s;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->requires_grad(*this); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr, "constant"); }

Var Tape::variable(Tensor value) { return record(std::move(value), true, nullptr, "variable"); }

Var Tape::parameter(const Tensor& value, bool requires_grad) {
  Node node;
  node.external = &value;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, bool requires_grad, BackwardFn backward, const char* op) {
  if (!value.all_finite())
    throw std::domain_error(std::string("non-finite value produced by ") + op);
  Node node;
  node.owned = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id_).value(); }

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id_);
  if (n.grad.rows() != n.value().rows() || n.grad.cols() != n.value().cols())
    throw std::logic_error("Tape::grad: no gradient recorded for this node");
  return n.grad;
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id_];
  const Tensor& val = n.value();
  if (n.grad.rows() != val.rows() || n.grad.cols() != val.cols())
    n.grad = Tensor(val.rows(), val.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (!nodes_[v.id_].requires_grad) return;
  Tensor& buf = grad_buffer(v);
  auto dst = buf.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::invalid_argument("backward: loss belongs to another tape");
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw std::invalid_argument("backward: loss must be 1x1");

  for (Node& n : nodes_) {
    n.grad = n.requires_grad ? Tensor(n.value().rows(), n.value().cols()) : Tensor();
  }
  if (!nodes_[loss.id_].requires_grad) return;
  nodes_[loss.id_].grad[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.backward) n.backward(*this, n.value(), n.grad);
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw std::invalid_argument("operand is not bound to a tape");
  return *a.tape();
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
  return tape_of(a);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows())
    throw std::invalid_argument("matmul: " + shape_string(av) + " x " + shape_string(bv));
  Tensor out(av.rows(), bv.cols());
  gemm_accumulate(av, false, bv, false, out);
  return tape.record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [a, b](Tape& t, const Tensor&, const Tensor& g) {
        if (a.requires_grad()) gemm_accumulate(g, false, b.value(), true, t.grad_buffer(a));
        if (b.requires_grad()) gemm_accumulate(a.value(), true, g, false, t.grad_buffer(b));
      },
      "matmul");
}

Var transpose(Var a) {
  Tape& tape = tape_of(a);
  const Tensor& av = a.value();
  Tensor out(av.cols(), av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r)
    for (std::size_t c = 0; c < av.cols(); ++c) out(c, r) = av(r, c);
  return tape.record(
      std::move(out), a.requires_grad(),
      [a](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < ga.rows(); ++r)
          for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
      },
      "transpose");
}

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape())
    throw std::invalid_argument("add: " + shape_string(av) + " + " + shape_string(bv));
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [a, b](Tape& t, const Tensor&, const Tensor& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
      },
      "add");
}

Var add_bias(Var x, Var bias) {
  Tape& tape = tape_of(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.size() != xv.cols())
    throw std::invalid_argument("add_bias: " + shape_string(xv) + " + " + shape_string(bv));
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  return tape.record(
      std::move(out), x.requires_grad() || bias.requires_grad(),
      [x, bias](Tape& t, const Tensor&, const Tensor& g) {
        t.accumulate(x, g);
        if (!bias.requires_grad()) return;
        Tensor& gb = t.grad_buffer(bias);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      },
      "add_bias");
}

Var scale(Var x, double s) {
  Tape& tape = tape_of(x);
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return tape.record(
      std::move(out), x.requires_grad(),
      [x, s](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
      },
      "scale");
}

Var relu(Var x) {
  Tape& tape = tape_of(x);
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], 0.0);
  return tape.record(
      std::move(out), x.requires_grad(),
      [x](Tape& t, const Tensor& y, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (y[i] > 0.0) gx[i] += g[i];
      },
      "relu");
}

Var softmax_rows(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols(); ++c) mx = std::max(mx, xv(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) z += (out(r, c) = std::exp(xv(r, c) - mx));
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) /= z;
  }
  return tape.record(
      std::move(out), x.requires_grad(),
      [x](Tape& t, const Tensor& y, const Tensor& g) {
        // dx = y * (g - <g, y>) per row
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) s += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - s);
        }
      },
      "softmax_rows");
}

Var log_softmax_rows(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < xv.cols(); ++c) mx = std::max(mx, xv(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < xv.cols(); ++c) z += std::exp(xv(r, c) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) - lse;
  }
  return tape.record(
      std::move(out), x.requires_grad(),
      [x](Tape& t, const Tensor& y, const Tensor& g) {
        // dx = g - softmax * sum(g) per row
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double s = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) s += g(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += g(r, c) - std::exp(y(r, c)) * s;
        }
      },
      "log_softmax_rows");
}

Var batch_norm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = tape_of(x, gain);
  tape_of(x, bias);
  const Tensor& xv = x.value();
  const std::size_t n = xv.rows();
  const std::size_t d = xv.cols();
  if (n < 2) throw std::invalid_argument("batch_norm: need at least 2 rows");
  if (gain.value().size() != d || bias.value().size() != d)
    throw std::invalid_argument("batch_norm: gain/bias size must equal column count");

  Tensor xhat(n, d);
  std::vector<double> inv_std(d);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += xv(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<double>(n);
    inv_std[c] = 1.0 / std::sqrt(var + eps);
    for (std::size_t r = 0; r < n; ++r) xhat(r, c) = (xv(r, c) - mean) * inv_std[c];
  }
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out(r, c) = gv[c] * xhat(r, c) + bv[c];

  return tape.record(
      std::move(out), x.requires_grad() || gain.requires_grad() || bias.requires_grad(),
      [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, const Tensor&, const Tensor& g) {
        const std::size_t n = g.rows();
        const std::size_t d = g.cols();
        const Tensor& gv = gain.value();
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < d; ++c) {
          double sum_g = 0.0;
          double sum_gx = 0.0;
          for (std::size_t r = 0; r < n; ++r) {
            sum_g += g(r, c);
            sum_gx += g(r, c) * xhat(r, c);
          }
          if (gain.requires_grad()) t.grad_buffer(gain)[c] += sum_gx;
          if (bias.requires_grad()) t.grad_buffer(bias)[c] += sum_g;
          if (x.requires_grad()) {
            Tensor& gx = t.grad_buffer(x);
            const double k = gv[c] * inv_std[c];
            for (std::size_t r = 0; r < n; ++r)
              gx(r, c) += k * (g(r, c) - inv_n * sum_g - xhat(r, c) * inv_n * sum_gx);
          }
        }
      },
      "batch_norm");
}

Var mean_rows(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.rows() == 0) throw std::invalid_argument("mean_rows: no rows");
  Tensor out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (std::size_t c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  const double inv = 1.0 / static_cast<double>(xv.rows());
  for (std::size_t c = 0; c < xv.cols(); ++c) out[c] *= inv;
  return tape.record(
      std::move(out), x.requires_grad(),
      [x, inv](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < gx.rows(); ++r)
          for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += inv * g[c];
      },
      "mean_rows");
}

Var gather_rows(Var x, std::span<const std::size_t> rows) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(rows.size(), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xv.rows()) throw std::invalid_argument("gather_rows: index out of range");
    for (std::size_t c = 0; c < xv.cols(); ++c) out(i, c) = xv(rows[i], c);
  }
  return tape.record(
      std::move(out), x.requires_grad(),
      [x, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Tape& t, const Tensor&,
                                                                     const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t c = 0; c < gx.cols(); ++c) gx(idx[i], c) += g(i, c);
      },
      "gather_rows");
}

Var gather_cols(Var x, std::span<const std::size_t> cols) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= xv.cols()) throw std::invalid_argument("gather_cols: index out of range");
    for (std::size_t r = 0; r < xv.rows(); ++r) out(r, j) = xv(r, cols[j]);
  }
  return tape.record(
      std::move(out), x.requires_grad(),
      [x, idx = std::vector<std::size_t>(cols.begin(), cols.end())](Tape& t, const Tensor&,
                                                                     const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < gx.rows(); ++r)
          for (std::size_t j = 0; j < idx.size(); ++j) gx(r, idx[j]) += g(r, j);
      },
      "gather_cols");
}

Var concat_rows(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.cols())
    throw std::invalid_argument("concat_rows: " + shape_string(av) + " / " + shape_string(bv));
  Tensor out(av.rows() + bv.rows(), av.cols());
  std::copy(av.data().begin(), av.data().end(), out.data().begin());
  std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(av.size()));
  return tape.record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [a, b](Tape& t, const Tensor&, const Tensor& g) {
        const std::size_t split = a.value().size();
        if (a.requires_grad()) {
          Tensor& ga = t.grad_buffer(a);
          for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          Tensor& gb = t.grad_buffer(b);
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
        }
      },
      "concat_rows");
}

Var concat_cols(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows())
    throw std::invalid_argument("concat_cols: " + shape_string(av) + " | " + shape_string(bv));
  const std::size_t ca = av.cols();
  Tensor out(av.rows(), ca + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < ca; ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < bv.cols(); ++c) out(r, ca + c) = bv(r, c);
  }
  return tape.record(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [a, b, ca](Tape& t, const Tensor&, const Tensor& g) {
        if (a.requires_grad()) {
          Tensor& ga = t.grad_buffer(a);
          for (std::size_t r = 0; r < ga.rows(); ++r)
            for (std::size_t c = 0; c < ca; ++c) ga(r, c) += g(r, c);
        }
        if (b.requires_grad()) {
          Tensor& gb = t.grad_buffer(b);
          for (std::size_t r = 0; r < gb.rows(); ++r)
            for (std::size_t c = 0; c < gb.cols(); ++c) gb(r, c) += g(r, ca + c);
        }
      },
      "concat_cols");
}

Var element(Var x, std::size_t r, std::size_t c) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (r >= xv.rows() || c >= xv.cols()) throw std::invalid_argument("element: index out of range");
  return tape.record(
      Tensor(1, 1, xv(r, c)), x.requires_grad(),
      [x, r, c](Tape& t, const Tensor&, const Tensor& g) { t.grad_buffer(x)(r, c) += g[0]; },
      "element");
}

Var sum(Var x) {
  Tape& tape = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return tape.record(
      Tensor(1, 1, s), x.requires_grad(),
      [x](Tape& t, const Tensor&, const Tensor& g) {
        Tensor& gx = t.grad_buffer(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
      },
      "sum");
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads,
               AdamState& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (state.first_moment.empty()) {
    for (const Tensor* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  if (state.first_moment.size() != params.size())
    throw std::invalid_argument("adam_step: state does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() ||
        params[i]->shape() != state.first_moment[i].shape())
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(i));
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace steiner
