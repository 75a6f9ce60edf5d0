#include "rcsl/numkit/param_store.hpp"

#include <cmath>
#include <cstring>

#include "rcsl/error.hpp"

namespace rcsl::numkit {

void ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) {
    throw ValidationError("param store: duplicate parameter name '" + name + "'");
  }
  index_[name] = entries_.size();
  entries_.push_back({name, std::move(value)});
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) != 0; }

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("param store: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ValidationError("param store: unknown parameter '" + name + "'");
  return entries_[it->second].value;
}

std::size_t ParamStore::total_scalars() const {
  std::size_t n = 0;
  for (const Entry& e : entries_) n += e.value.size();
  return n;
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!entries_[i].value.same_shape(other.entries_[i].value)) return false;
  }
  return true;
}

void ParamStore::copy_from(const ParamStore& other) {
  if (!same_layout(other)) throw ValidationError("param store: copy_from layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].value = other.entries_[i].value;
}

bool ParamStore::bitwise_equal(const ParamStore& other) const {
  if (!same_layout(other)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Tensor& a = entries_[i].value;
    const Tensor& b = other.entries_[i].value;
    if (std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

BoundParams bind(Tape& tape, const ParamStore& store, bool trainable) {
  BoundParams out;
  out.store = &store;
  out.vars.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    out.vars.push_back(trainable ? tape.input(store.tensor(i)) : tape.constant(store.tensor(i)));
  }
  return out;
}

Var BoundParams::var(const ParamStore& s, const std::string& name) const {
  if (&s != store) throw ValidationError("param store: bound vars belong to a different store");
  for (std::size_t i = 0; i < s.count(); ++i) {
    if (s.name(i) == name) return vars[i];
  }
  throw ValidationError("param store: unknown bound parameter '" + name + "'");
}

void accumulate_grads(const Tape& tape, const BoundParams& bound, std::vector<Tensor>& acc,
                      double scale_factor) {
  const ParamStore& store = *bound.store;
  if (acc.empty()) acc = zero_grads_like(store);
  if (acc.size() != store.count()) {
    throw ValidationError("param store: gradient accumulator layout mismatch");
  }
  for (std::size_t i = 0; i < store.count(); ++i) {
    const Tensor& g = tape.grad(bound.vars[i]);
    Tensor& a = acc[i];
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += scale_factor * g[j];
  }
}

std::vector<Tensor> zero_grads_like(const ParamStore& store) {
  std::vector<Tensor> out;
  out.reserve(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) out.push_back(Tensor::zeros(store.tensor(i).shape()));
  return out;
}

double grad_l2_norm(const std::vector<Tensor>& grads) {
  double acc = 0.0;
  for (const Tensor& g : grads)
    for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * g[i];
  return std::sqrt(acc);
}

}  // namespace rcsl::numkit
