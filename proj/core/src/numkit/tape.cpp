#include "rcsl/numkit/tape.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "rcsl/error.hpp"

namespace rcsl::numkit {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const EMat>;
using MMap = Eigen::Map<EMat>;

CMap emap(const Tensor& t) { return CMap(t.data(), t.rows(), t.cols()); }
MMap emap(Tensor& t) { return MMap(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ValidationError(std::string("numkit: ") + op + ": incompatible shapes " +
                        a.shape_str() + " and " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw ValidationError(std::string("numkit: ") + op + ": bad shape " + a.shape_str());
}

Tape* same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw ValidationError(std::string("numkit: ") + op + ": operands on different tapes");
  }
  return a.tape;
}

Tape* one_tape(const char* op, Var a) {
  if (!a.valid()) throw ValidationError(std::string("numkit: ") + op + ": invalid operand");
  return a.tape;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLnEps = 1e-5;

}  // namespace

Var Tape::record(Tensor value, bool requires_grad, const char* op_name,
                 std::function<void(Tape&)> back) {
  if (check_finite_ && !value.all_finite()) {
    throw RuntimeError(std::string("numkit: non-finite value produced by ") + op_name);
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) { return record(std::move(value), true, "input", nullptr); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, "constant", nullptr); }

const Tensor& Tape::val(Var v) const {
  if (!v.valid() || v.tape != this) throw ValidationError("numkit: val: foreign var");
  return nodes_[v.id].value;
}

const Tensor& Tape::grad(Var v) const {
  if (!v.valid() || v.tape != this) throw ValidationError("numkit: grad: foreign var");
  const Node& n = nodes_[v.id];
  if (n.grad_live) return n.grad;
  // Root never reached this node; report a zero gradient of the right shape.
  zero_like_cache_.push_back(Tensor::zeros(n.value.shape()));
  return zero_like_cache_.back();
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[id];
  if (!n.grad_live) {
    n.grad = Tensor::zeros(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

void Tape::backward(Var root) {
  if (!root.valid() || root.tape != this) {
    throw ValidationError("numkit: backward: root is not on this tape");
  }
  if (nodes_[root.id].value.size() != 1) {
    throw ValidationError("numkit: backward: root must be scalar, got " +
                          nodes_[root.id].value.shape_str());
  }
  grad_buf(root.id)[0] = 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad_live && n.back) n.back(*this);
  }
}

// --- primitives -------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape* t = same_tape("matmul", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) shape_error("matmul", A, B);
  Tensor C({A.rows(), B.cols()});
  emap(C).noalias() = emap(A) * emap(B);
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "matmul", [a, b, oid](Tape& tp) {
    const Tensor& gC = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& B2 = tp.value_of(b.id);
    if (tp.wants_grad(a)) emap(tp.grad_buf(a.id)).noalias() += emap(gC) * emap(B2).transpose();
    if (tp.wants_grad(b)) emap(tp.grad_buf(b.id)).noalias() += emap(A2).transpose() * emap(gC);
  });
}

Var matmul_nt(Var a, Var b) {
  Tape* t = same_tape("matmul_nt", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols()) shape_error("matmul_nt", A, B);
  Tensor C({A.rows(), B.rows()});
  emap(C).noalias() = emap(A) * emap(B).transpose();
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "matmul_nt", [a, b, oid](Tape& tp) {
    const Tensor& gC = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& B2 = tp.value_of(b.id);
    if (tp.wants_grad(a)) emap(tp.grad_buf(a.id)).noalias() += emap(gC) * emap(B2);
    if (tp.wants_grad(b)) emap(tp.grad_buf(b.id)).noalias() += emap(gC).transpose() * emap(A2);
  });
}

Var add(Var a, Var b) {
  Tape* t = same_tape("add", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] + B[i];
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "add", [a, b, oid](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.wants_grad(b)) {
      Tensor& gb = tp.grad_buf(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape* t = same_tape("sub", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] - B[i];
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "sub", [a, b, oid](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.wants_grad(b)) {
      Tensor& gb = tp.grad_buf(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape* t = same_tape("mul", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "mul", [a, b, oid](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& B2 = tp.value_of(b.id);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B2[i];
    }
    if (tp.wants_grad(b)) {
      Tensor& gb = tp.grad_buf(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A2[i];
    }
  });
}

Var add_rowvec(Var a, Var v) {
  Tape* t = same_tape("add_rowvec", a, v);
  const Tensor& A = t->val(a);
  const Tensor& V = t->val(v);
  if (A.rank() != 2 || V.rank() != 1 || V.size() != A.cols()) shape_error("add_rowvec", A, V);
  Tensor C(A.shape());
  const std::size_t m = A.rows(), n = A.cols();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) C.at2(r, c) = A.at2(r, c) + V[c];
  const bool rg = t->wants_grad(a) || t->wants_grad(v);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "add_rowvec", [a, v, oid, m, n](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.wants_grad(v)) {
      Tensor& gv = tp.grad_buf(v.id);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gv[c] += g.at2(r, c);
    }
  });
}

Var mul_colvec(Var a, Var v) {
  Tape* t = same_tape("mul_colvec", a, v);
  const Tensor& A = t->val(a);
  const Tensor& V = t->val(v);
  if (A.rank() != 2 || V.rank() != 1 || V.size() != A.rows()) shape_error("mul_colvec", A, V);
  Tensor C(A.shape());
  const std::size_t m = A.rows(), n = A.cols();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) C.at2(r, c) = A.at2(r, c) * V[r];
  const bool rg = t->wants_grad(a) || t->wants_grad(v);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "mul_colvec", [a, v, oid, m, n](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& V2 = tp.value_of(v.id);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) ga.at2(r, c) += g.at2(r, c) * V2[r];
    }
    if (tp.wants_grad(v)) {
      Tensor& gv = tp.grad_buf(v.id);
      for (std::size_t r = 0; r < m; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += g.at2(r, c) * A2.at2(r, c);
        gv[r] += acc;
      }
    }
  });
}

Var scale(Var a, double c) {
  Tape* t = one_tape("scale", a);
  const Tensor& A = t->val(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * c;
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "scale", [a, c, oid](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

Var gelu(Var a) {
  Tape* t = one_tape("gelu", a);
  const Tensor& A = t->val(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) {
    const double x = A[i];
    C[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "gelu", [a, oid](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = A2[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ga[i] += g[i] * (cdf + x * pdf);
    }
  });
}

Var softmax_rows(Var a) {
  Tape* t = one_tape("softmax_rows", a);
  const Tensor& A = t->val(a);
  if (A.rank() != 2) shape_error("softmax_rows", A);
  Tensor C(A.shape());
  const std::size_t m = A.rows(), n = A.cols();
  for (std::size_t r = 0; r < m; ++r) {
    double mx = A.at2(r, 0);
    for (std::size_t c = 1; c < n; ++c) mx = std::max(mx, A.at2(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double e = std::exp(A.at2(r, c) - mx);
      C.at2(r, c) = e;
      z += e;
    }
    const double inv = 1.0 / z;
    for (std::size_t c = 0; c < n; ++c) C.at2(r, c) *= inv;
  }
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "softmax_rows", [a, oid, m, n](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& Y = tp.value_of(oid);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g.at2(r, c) * Y.at2(r, c);
      for (std::size_t c = 0; c < n; ++c)
        ga.at2(r, c) += Y.at2(r, c) * (g.at2(r, c) - dot);
    }
  });
}

Var layer_norm(Var a, Var gain, Var bias) {
  Tape* t = same_tape("layer_norm", a, gain);
  same_tape("layer_norm", a, bias);
  const Tensor& A = t->val(a);
  const Tensor& G = t->val(gain);
  const Tensor& B = t->val(bias);
  if (A.rank() != 2 || G.rank() != 1 || B.rank() != 1 || G.size() != A.cols() ||
      B.size() != A.cols()) {
    shape_error("layer_norm", A, G);
  }
  const std::size_t m = A.rows(), n = A.cols();
  Tensor C(A.shape());
  std::vector<double> rstd(m), mean(m);
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += A.at2(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = A.at2(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double rs = 1.0 / std::sqrt(var + kLnEps);
    mean[r] = mu;
    rstd[r] = rs;
    for (std::size_t c = 0; c < n; ++c)
      C.at2(r, c) = (A.at2(r, c) - mu) * rs * G[c] + B[c];
  }
  const bool rg = t->wants_grad(a) || t->wants_grad(gain) || t->wants_grad(bias);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "layer_norm",
                   [a, gain, bias, oid, m, n, mean = std::move(mean),
                    rstd = std::move(rstd)](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& G2 = tp.value_of(gain.id);
    for (std::size_t r = 0; r < m; ++r) {
      if (tp.wants_grad(gain)) {
        Tensor& gg = tp.grad_buf(gain.id);
        for (std::size_t c = 0; c < n; ++c)
          gg[c] += g.at2(r, c) * (A2.at2(r, c) - mean[r]) * rstd[r];
      }
      if (tp.wants_grad(bias)) {
        Tensor& gb = tp.grad_buf(bias.id);
        for (std::size_t c = 0; c < n; ++c) gb[c] += g.at2(r, c);
      }
      if (tp.wants_grad(a)) {
        Tensor& ga = tp.grad_buf(a.id);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          const double xhat = (A2.at2(r, c) - mean[r]) * rstd[r];
          const double gy = g.at2(r, c) * G2[c];
          s1 += gy;
          s2 += gy * xhat;
        }
        const double invn = 1.0 / static_cast<double>(n);
        for (std::size_t c = 0; c < n; ++c) {
          const double xhat = (A2.at2(r, c) - mean[r]) * rstd[r];
          const double gy = g.at2(r, c) * G2[c];
          ga.at2(r, c) += rstd[r] * (gy - invn * s1 - xhat * invn * s2);
        }
      }
    }
  });
}

Var causal_conv1d(Var x, Var kernel) {
  Tape* t = same_tape("causal_conv1d", x, kernel);
  const Tensor& X = t->val(x);
  const Tensor& K = t->val(kernel);
  if (X.rank() != 2 || K.rank() != 3 || K.extent(1) != X.cols()) {
    shape_error("causal_conv1d", X, K);
  }
  const std::size_t T = X.rows(), cin = X.cols();
  const std::size_t w = K.extent(0), cout = K.extent(2);
  Tensor Y({T, cout});
  // Kernel slot j applies at lag w-1-j, so slot 0 is the oldest tap and slot
  // w-1 multiplies the current frame: y[t] = sum_j x[t-(w-1-j)] @ K[j].
  // Each lag is one GEMM over the overlapping frames.
  for (std::size_t j = 0; j < w; ++j) {
    const std::size_t lag = w - 1 - j;
    if (lag >= T) continue;
    const std::size_t len = T - lag;
    CMap xs(X.data(), len, cin);
    CMap kj(K.data() + j * cin * cout, cin, cout);
    MMap ys(Y.data() + lag * cout, len, cout);
    ys.noalias() += xs * kj;
  }
  const bool rg = t->wants_grad(x) || t->wants_grad(kernel);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(Y), rg, "causal_conv1d",
                   [x, kernel, oid, T, cin, w, cout](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& X2 = tp.value_of(x.id);
    const Tensor& K2 = tp.value_of(kernel.id);
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t lag = w - 1 - j;
      if (lag >= T) continue;
      const std::size_t len = T - lag;
      CMap gs(g.data() + lag * cout, len, cout);
      CMap kj(K2.data() + j * cin * cout, cin, cout);
      CMap xs(X2.data(), len, cin);
      if (tp.wants_grad(x)) {
        MMap gx(tp.grad_buf(x.id).data(), len, cin);
        gx.noalias() += gs * kj.transpose();
      }
      if (tp.wants_grad(kernel)) {
        MMap gk(tp.grad_buf(kernel.id).data() + j * cin * cout, cin, cout);
        gk.noalias() += xs.transpose() * gs;
      }
    }
  });
}

Var absolute(Var a) {
  Tape* t = one_tape("absolute", a);
  const Tensor& A = t->val(a);
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = std::fabs(A[i]);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "absolute", [a, oid](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    const Tensor& A2 = tp.value_of(a.id);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = A2[i] > 0.0 ? 1.0 : (A2[i] < 0.0 ? -1.0 : 0.0);
      ga[i] += g[i] * s;
    }
  });
}

Var sum(Var a) {
  Tape* t = one_tape("sum", a);
  const Tensor& A = t->val(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i];
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(Tensor::scalar(acc), t->wants_grad(a), "sum", [a, oid](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const double g = tp.grad_buf(oid)[0];
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mse(Var a, Var b) {
  Tape* t = same_tape("mse", a, b);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  if (!A.same_shape(B)) shape_error("mse", A, B);
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double d = A[i] - B[i];
    acc += d * d;
  }
  const double n = static_cast<double>(A.size());
  const bool rg = t->wants_grad(a) || t->wants_grad(b);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(Tensor::scalar(acc / n), rg, "mse", [a, b, oid, n](Tape& tp) {
    const double g = tp.grad_buf(oid)[0] * 2.0 / n;
    const Tensor& A2 = tp.value_of(a.id);
    const Tensor& B2 = tp.value_of(b.id);
    if (tp.wants_grad(a)) {
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * (A2[i] - B2[i]);
    }
    if (tp.wants_grad(b)) {
      Tensor& gb = tp.grad_buf(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g * (A2[i] - B2[i]);
    }
  });
}

Var stop_gradient(Var a) {
  Tape* t = one_tape("stop_gradient", a);
  // Value passes through; the node is marked non-differentiable so backward
  // never crosses the barrier.
  return t->record(t->val(a), false, "stop_gradient", nullptr);
}

Var slice_cols(Var a, std::size_t c0, std::size_t c1) {
  Tape* t = one_tape("slice_cols", a);
  const Tensor& A = t->val(a);
  if (A.rank() != 2 || c0 >= c1 || c1 > A.cols()) shape_error("slice_cols", A);
  const std::size_t m = A.rows(), n = c1 - c0;
  Tensor C({m, n});
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) C.at2(r, c) = A.at2(r, c0 + c);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "slice_cols", [a, c0, oid, m, n](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) ga.at2(r, c0 + c) += g.at2(r, c);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ValidationError("numkit: concat_cols: no operands");
  Tape* t = one_tape("concat_cols", parts[0]);
  std::size_t m = t->val(parts[0]).rows(), total = 0;
  bool rg = false;
  for (Var p : parts) {
    same_tape("concat_cols", parts[0], p);
    const Tensor& P = t->val(p);
    if (P.rank() != 2 || P.rows() != m) shape_error("concat_cols", P);
    total += P.cols();
    rg = rg || t->wants_grad(p);
  }
  Tensor C({m, total});
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& P = t->val(p);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < P.cols(); ++c) C.at2(r, off + c) = P.at2(r, c);
    off += P.cols();
  }
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), rg, "concat_cols", [parts, oid, m](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    std::size_t off = 0;
    for (Var p : parts) {
      const std::size_t pc = tp.value_of(p.id).cols();
      if (tp.wants_grad(p)) {
        Tensor& gp = tp.grad_buf(p.id);
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < pc; ++c) gp.at2(r, c) += g.at2(r, off + c);
      }
      off += pc;
    }
  });
}

Var interleave_rows3(Var a, Var b, Var c) {
  Tape* t = same_tape("interleave_rows3", a, b);
  same_tape("interleave_rows3", a, c);
  const Tensor& A = t->val(a);
  const Tensor& B = t->val(b);
  const Tensor& Cc = t->val(c);
  if (A.rank() != 2 || !A.same_shape(B) || !A.same_shape(Cc)) shape_error("interleave_rows3", A, B);
  const std::size_t k = A.rows(), d = A.cols();
  Tensor Y({3 * k, d});
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t cc = 0; cc < d; ++cc) {
      Y.at2(3 * i, cc) = A.at2(i, cc);
      Y.at2(3 * i + 1, cc) = B.at2(i, cc);
      Y.at2(3 * i + 2, cc) = Cc.at2(i, cc);
    }
  }
  const bool rg = t->wants_grad(a) || t->wants_grad(b) || t->wants_grad(c);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(Y), rg, "interleave_rows3", [a, b, c, oid, k, d](Tape& tp) {
    const Tensor& g = tp.grad_buf(oid);
    for (std::size_t i = 0; i < k; ++i) {
      if (tp.wants_grad(a)) {
        Tensor& ga = tp.grad_buf(a.id);
        for (std::size_t cc = 0; cc < d; ++cc) ga.at2(i, cc) += g.at2(3 * i, cc);
      }
      if (tp.wants_grad(b)) {
        Tensor& gb = tp.grad_buf(b.id);
        for (std::size_t cc = 0; cc < d; ++cc) gb.at2(i, cc) += g.at2(3 * i + 1, cc);
      }
      if (tp.wants_grad(c)) {
        Tensor& gc = tp.grad_buf(c.id);
        for (std::size_t cc = 0; cc < d; ++cc) gc.at2(i, cc) += g.at2(3 * i + 2, cc);
      }
    }
  });
}

Var take_rows_stride3(Var x, std::size_t phase) {
  Tape* t = one_tape("take_rows_stride3", x);
  const Tensor& X = t->val(x);
  if (X.rank() != 2 || X.rows() % 3 != 0 || phase >= 3) shape_error("take_rows_stride3", X);
  const std::size_t k = X.rows() / 3, d = X.cols();
  Tensor Y({k, d});
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t c = 0; c < d; ++c) Y.at2(i, c) = X.at2(3 * i + phase, c);
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(Y), t->wants_grad(x), "take_rows_stride3",
                   [x, phase, oid, k, d](Tape& tp) {
    if (!tp.wants_grad(x)) return;
    const Tensor& g = tp.grad_buf(oid);
    Tensor& gx = tp.grad_buf(x.id);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < d; ++c) gx.at2(3 * i + phase, c) += g.at2(i, c);
  });
}

Var gather_rows(Var table, const std::vector<std::size_t>& indices) {
  Tape* t = one_tape("gather_rows", table);
  const Tensor& Tb = t->val(table);
  if (Tb.rank() != 2) shape_error("gather_rows", Tb);
  const std::size_t d = Tb.cols();
  Tensor Y({indices.size(), d});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= Tb.rows()) {
      throw ValidationError("numkit: gather_rows: index " + std::to_string(indices[i]) +
                            " out of range for table " + Tb.shape_str());
    }
    for (std::size_t c = 0; c < d; ++c) Y.at2(i, c) = Tb.at2(indices[i], c);
  }
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(Y), t->wants_grad(table), "gather_rows",
                   [table, indices, oid, d](Tape& tp) {
    if (!tp.wants_grad(table)) return;
    const Tensor& g = tp.grad_buf(oid);
    Tensor& gt = tp.grad_buf(table.id);
    for (std::size_t i = 0; i < indices.size(); ++i)
      for (std::size_t c = 0; c < d; ++c) gt.at2(indices[i], c) += g.at2(i, c);
  });
}

Var dropout(Var a, double p, Rng& rng) {
  Tape* t = one_tape("dropout", a);
  if (p < 0.0 || p >= 1.0) {
    throw ValidationError("numkit: dropout: rate must lie in [0, 1), got " + std::to_string(p));
  }
  const Tensor& A = t->val(a);
  if (p == 0.0) {
    // Identity at rate zero; no mask is drawn so the rng stream is untouched.
    const int oid0 = static_cast<int>(t->num_nodes());
    return t->record(A, t->wants_grad(a), "dropout", [a, oid0](Tape& tp) {
      if (!tp.wants_grad(a)) return;
      const Tensor& g = tp.grad_buf(oid0);
      Tensor& ga = tp.grad_buf(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
    });
  }
  const double keep = 1.0 - p, inv = 1.0 / keep;
  std::vector<double> mask(A.size());
  for (double& m : mask) m = rng.uniform() < keep ? inv : 0.0;
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * mask[i];
  const int oid = static_cast<int>(t->num_nodes());
  return t->record(std::move(C), t->wants_grad(a), "dropout",
                   [a, oid, mask = std::move(mask)](Tape& tp) {
    if (!tp.wants_grad(a)) return;
    const Tensor& g = tp.grad_buf(oid);
    Tensor& ga = tp.grad_buf(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

}  // namespace rcsl::numkit
