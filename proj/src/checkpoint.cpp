#include "coex/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; byte swaps not implemented");

namespace coex::nd {

namespace {

constexpr char kMagic[4] = {'C', 'O', 'E', 'X'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("checkpoint: truncated stream reading ") + what);
  return v;
}

void read_bytes(std::istream& is, void* dst, size_t n, const char* what) {
  is.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (!is) throw std::runtime_error(std::string("checkpoint: truncated stream reading ") + what);
}

}  // namespace

void write_tensor_blob(std::ostream& os,
                       const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  os.write(kMagic, 4);
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint64_t>(os, tensors.size());
  for (const auto& [name, t] : tensors) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(os, static_cast<uint32_t>(t->rank()));
    for (int d = 0; d < t->rank(); ++d) write_pod<uint64_t>(os, static_cast<uint64_t>(t->dim(d)));
    os.write(reinterpret_cast<const char*>(t->data()),
             static_cast<std::streamsize>(sizeof(double) * t->size()));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed");
}

std::vector<std::pair<std::string, Tensor>> read_tensor_blob(std::istream& is) {
  char magic[4];
  read_bytes(is, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic (not a COEX blob)");
  }
  const auto version = read_pod<uint32_t>(is, "format version");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto count = read_pod<uint64_t>(is, "tensor count");
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<uint32_t>(is, "name length");
    std::string name(name_len, '\0');
    if (name_len > 0) read_bytes(is, name.data(), name_len, "name");
    const auto rank = read_pod<uint32_t>(is, "rank");
    std::vector<int> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(read_pod<uint64_t>(is, "dimension"));
    }
    Tensor t(shape);
    if (t.size() > 0) {
      read_bytes(is, t.data(), sizeof(double) * static_cast<size_t>(t.size()),
                 ("data of '" + name + "'").c_str());
    }
    out.emplace_back(std::move(name), std::move(t));
  }
  return out;
}

void save_params(std::ostream& os, const ParameterSet& params) {
  std::vector<std::pair<std::string, const Tensor*>> list;
  list.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const ParamEntry& e = params.entry(i);
    list.emplace_back(e.name, &e.value);
  }
  write_tensor_blob(os, list);
}

void load_params(std::istream& is, ParameterSet& params) {
  auto loaded = read_tensor_blob(is);
  if (loaded.size() != params.size()) {
    throw std::runtime_error("checkpoint: expected " + std::to_string(params.size()) +
                             " parameters, blob holds " + std::to_string(loaded.size()));
  }
  for (auto& [name, t] : loaded) {
    if (!params.has(name)) {
      throw std::runtime_error("checkpoint: blob parameter '" + name + "' not present in model");
    }
    ParamEntry& e = params.at(name);
    if (!e.value.same_shape(t)) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "': model " +
                               e.value.shape_str() + " vs blob " + t.shape_str());
    }
    e.value = std::move(t);
  }
}

void save_params_full(std::ostream& os, const ParameterSet& params) {
  save_params(os, params);
  write_pod<uint64_t>(os, static_cast<uint64_t>(params.step_count()));
  std::vector<std::pair<std::string, const Tensor*>> s0, s1;
  for (size_t i = 0; i < params.size(); ++i) {
    const ParamEntry& e = params.entry(i);
    if (!e.slot0.empty()) s0.emplace_back(e.name, &e.slot0);
    if (!e.slot1.empty()) s1.emplace_back(e.name, &e.slot1);
  }
  write_tensor_blob(os, s0);
  write_tensor_blob(os, s1);
}

void load_params_full(std::istream& is, ParameterSet& params) {
  load_params(is, params);
  params.set_step_count(static_cast<long long>(read_pod<uint64_t>(is, "optimizer step count")));
  for (auto& [name, t] : read_tensor_blob(is)) {
    if (!params.has(name)) {
      throw std::runtime_error("checkpoint: slot for unknown parameter '" + name + "'");
    }
    params.at(name).slot0 = std::move(t);
  }
  for (auto& [name, t] : read_tensor_blob(is)) {
    if (!params.has(name)) {
      throw std::runtime_error("checkpoint: slot for unknown parameter '" + name + "'");
    }
    params.at(name).slot1 = std::move(t);
  }
}

}  // namespace coex::nd
