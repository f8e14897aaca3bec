#include "coex/params.hpp"

#include <cmath>
#include <stdexcept>

namespace coex::nd {

ParamEntry& ParameterSet::add(const std::string& name, Tensor init) {
  if (index_.count(name)) {
    throw std::invalid_argument("ParameterSet::add: duplicate parameter name '" + name + "'");
  }
  auto e = std::make_unique<ParamEntry>();
  e->name = name;
  e->grad = Tensor(init.shape());
  e->value = std::move(init);
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return *entries_.back();
}

ParamEntry& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("ParameterSet::at: no parameter named '" + name + "'");
  }
  return *entries_[it->second];
}

const ParamEntry& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::out_of_range("ParameterSet::at: no parameter named '" + name + "'");
  }
  return *entries_[it->second];
}

bool ParameterSet::has(const std::string& name) const { return index_.count(name) > 0; }

void ParameterSet::zero_grads() {
  for (auto& e : entries_) e->grad.fill(0.0);
}

long long ParameterSet::total_scalars() const {
  long long n = 0;
  for (const auto& e : entries_) n += static_cast<long long>(e->value.size());
  return n;
}

Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng) {
  if (fan_in <= 0) throw std::invalid_argument("he_uniform: fan_in must be positive");
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (size_t i = 0; i < t.size(); ++i) {
    t[i] = (rng.next_double() * 2.0 - 1.0) * bound;
  }
  return t;
}

}  // namespace coex::nd
