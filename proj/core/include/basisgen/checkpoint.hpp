#pragma once

#include <map>
#include <string>
#include <vector>

#include "basisgen/tensor.hpp"

namespace basisgen {

/// "BGT1" container: magic bytes, then per tensor
///   name length (u32 LE), UTF-8 name, ndim (u32 LE), dims (u32 LE each),
///   data as little-endian 64-bit reals.
/// Entries keep insertion order so writes are byte-reproducible.
class Checkpoint {
 public:
  void put(const std::string& name, const Tensor& t);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  void save(const std::string& path) const;
  /// Throws TensorError on unknown magic or truncated input.
  static Checkpoint load(const std::string& path);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

}  // namespace basisgen
