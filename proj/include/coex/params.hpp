#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "coex/rng.hpp"
#include "coex/tensor.hpp"

namespace coex::nd {

// One named parameter with paired gradient storage and optimizer slots.
// slot0/slot1 are allocated lazily by the optimizer (RMSProp uses slot0 only,
// Adam uses both).
struct ParamEntry {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor slot0;
  Tensor slot1;
};

class ParameterSet {
 public:
  ParamEntry& add(const std::string& name, Tensor init);
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  bool has(const std::string& name) const;

  size_t size() const { return entries_.size(); }
  ParamEntry& entry(size_t i) { return *entries_[i]; }
  const ParamEntry& entry(size_t i) const { return *entries_[i]; }

  void zero_grads();
  long long step_count() const { return step_count_; }
  void set_step_count(long long n) { step_count_ = n; }
  void bump_step_count() { ++step_count_; }

  long long total_scalars() const;

 private:
  std::vector<std::unique_ptr<ParamEntry>> entries_;  // stable addresses
  std::unordered_map<std::string, size_t> index_;
  long long step_count_ = 0;  // shared optimizer step counter (Adam bias correction)
};

// Fan-in-scaled uniform init for conv/dense weights, U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
Tensor he_uniform(std::vector<int> shape, int fan_in, Rng& rng);

}  // namespace coex::nd
