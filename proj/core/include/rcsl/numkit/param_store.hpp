#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rcsl/numkit/tape.hpp"
#include "rcsl/numkit/tensor.hpp"

namespace rcsl::numkit {

// Ordered collection of named parameter tensors. Order is insertion order and
// is part of the contract: optimizer state, gradient accumulators and
// checkpoints all key off it.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  bool has(const std::string& name) const;
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;

  std::size_t count() const { return entries_.size(); }
  std::size_t total_scalars() const;
  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Tensor& tensor(std::size_t i) { return entries_[i].value; }
  const Tensor& tensor(std::size_t i) const { return entries_[i].value; }

  // Overwrites every tensor with the same-named tensor from other; the two
  // stores must agree on names, order and shapes.
  void copy_from(const ParamStore& other);
  bool same_layout(const ParamStore& other) const;
  bool bitwise_equal(const ParamStore& other) const;

 private:
  struct Entry {
    std::string name;
    Tensor value;
  };
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Parameters registered on a tape for one forward pass, in store order.
// trainable=false registers constants: values participate in the forward
// computation but backward never produces gradients for them.
struct BoundParams {
  std::vector<Var> vars;
  Var var(const ParamStore& store, const std::string& name) const;

  // internal: parallel array lookup
  const ParamStore* store = nullptr;
};
BoundParams bind(Tape& tape, const ParamStore& store, bool trainable);

// Adds scale * d(root)/d(param) into acc for every bound parameter.
// acc is created zeroed on first use.
void accumulate_grads(const Tape& tape, const BoundParams& bound,
                      std::vector<Tensor>& acc, double scale_factor);

std::vector<Tensor> zero_grads_like(const ParamStore& store);
double grad_l2_norm(const std::vector<Tensor>& grads);

}  // namespace rcsl::numkit
