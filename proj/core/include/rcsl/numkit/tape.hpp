#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "rcsl/numkit/rng.hpp"
#include "rcsl/numkit/tensor.hpp"

namespace rcsl::numkit {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode automatic differentiation over an explicit operation tape.
// One tape records one forward computation; backward() replays it in reverse.
// A tape is single-threaded; run concurrent computations on separate tapes.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf.
  Var input(Tensor value);
  // Non-differentiable leaf; backward never propagates into it.
  Var constant(Tensor value);

  const Tensor& val(Var v) const;
  // Gradient of the last backward()'s root with respect to v. Zero tensor if
  // the root does not depend on v.
  const Tensor& grad(Var v) const;

  // Seeds d(root)/d(root) = 1 and sweeps the tape in reverse. root must be a
  // scalar (single element). Gradients accumulate into every differentiable
  // node recorded before root.
  void backward(Var root);

  // When set, every op output is scanned and a non-finite value raises an
  // error naming the op. On by default; the cost is small next to the matmuls.
  void set_check_finite(bool on) { check_finite_ = on; }

  std::size_t num_nodes() const { return nodes_.size(); }

  // --- internal plumbing for the op implementations -------------------------
  struct Node {
    Tensor value;
    Tensor grad;          // empty until touched by backward
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void(Tape&)> back;  // empty for leaves
  };
  Var record(Tensor value, bool requires_grad, const char* op_name,
             std::function<void(Tape&)> back);
  Tensor& grad_buf(int id);  // allocates zeros on first touch
  bool grad_touched(int id) const { return nodes_[id].grad_live; }
  const Tensor& value_of(int id) const { return nodes_[id].value; }
  bool wants_grad(Var v) const { return v.valid() && nodes_[v.id].requires_grad; }

 private:
  std::vector<Node> nodes_;
  bool check_finite_ = true;
  Tensor zero_scalar_ = Tensor::zeros({1});
  mutable std::deque<Tensor> zero_like_cache_;
};

// --- primitives -------------------------------------------------------------
// All ops validate shapes and name themselves in error messages.

Var matmul(Var a, Var b);     // [m,k] @ [k,n] -> [m,n]
Var matmul_nt(Var a, Var b);  // [m,k] @ [n,k]^T -> [m,n]
Var add(Var a, Var b);        // same shape
Var sub(Var a, Var b);
Var mul(Var a, Var b);        // elementwise, same shape
Var add_rowvec(Var a, Var v);  // [m,n] + [n] broadcast over rows
Var mul_colvec(Var a, Var v);  // row i of a scaled by v[i]
Var scale(Var a, double c);
Var gelu(Var a);               // exact erf form
Var softmax_rows(Var a);       // softmax over the last axis, max-subtracted
Var layer_norm(Var a, Var gain, Var bias);  // per row, eps 1e-5
// Causal 1-d convolution: x [T,Cin], kernel [w,Cin,Cout] -> [T,Cout].
// Output at time t sees inputs t-w+1..t with the left edge zero-padded.
// Kernel slot j applies to the input at lag w-1-j, so slot 0 touches the
// oldest frame in the window and slot w-1 the current one:
//   y[t] = sum_{j=0}^{w-1} x[t-(w-1-j)] @ kernel[j], out-of-range terms dropped.
Var causal_conv1d(Var x, Var kernel);
Var absolute(Var a);
Var sum(Var a);               // -> [1]
Var mse(Var a, Var b);        // mean squared difference -> [1]
Var stop_gradient(Var a);
Var slice_cols(Var a, std::size_t c0, std::size_t c1);
Var concat_cols(const std::vector<Var>& parts);
// Rows of a, b, c interleaved as 3i, 3i+1, 3i+2.
Var interleave_rows3(Var a, Var b, Var c);
// Inverse of the above: rows phase, phase+3, ... of x.
Var take_rows_stride3(Var x, std::size_t phase);
Var gather_rows(Var table, const std::vector<std::size_t>& indices);
// Inverted-scale dropout; the mask is drawn at record time from rng.
Var dropout(Var a, double p, Rng& rng);

}  // namespace rcsl::numkit
