#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "coex/params.hpp"

namespace coex::nd {

// Versioned binary blob of named tensors: magic "COEX", u32 format version,
// u64 tensor count, then per tensor: u32 name length, name bytes, u32 rank,
// u64 dims, raw little-endian 64-bit reals. Round-trips bit-exactly.
void write_tensor_blob(std::ostream& os,
                       const std::vector<std::pair<std::string, const Tensor*>>& tensors);
std::vector<std::pair<std::string, Tensor>> read_tensor_blob(std::istream& is);

// Parameter values only (the published-weights form).
void save_params(std::ostream& os, const ParameterSet& params);
// Loads values into an already-constructed set; every name and shape must match.
void load_params(std::istream& is, ParameterSet& params);

// Values + optimizer slots + step counter, for exact training resume.
void save_params_full(std::ostream& os, const ParameterSet& params);
void load_params_full(std::istream& is, ParameterSet& params);

}  // namespace coex::nd
