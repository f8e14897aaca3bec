#pragma once

#include "coex/params.hpp"

namespace coex::nd {

struct RmsPropConfig {
  double lr = 7e-4;
  double decay = 0.99;
  double eps = 1e-5;  // added inside the square root
};

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Both update every parameter in place from its populated gradient and advance
// the optimizer slots; a NaN/inf gradient fails loudly, naming the parameter.
// slot0 holds the squared-gradient accumulator (both methods); Adam keeps its
// first moment in slot1 and reads the shared step counter for bias correction.
void rmsprop_step(ParameterSet& params, const RmsPropConfig& cfg = {});
void adam_step(ParameterSet& params, const AdamConfig& cfg = {});

}  // namespace coex::nd
