#pragma once

// Single-file checkpoint container. Layout (all integers little-endian):
//   magic "SOMX1" | u32 version | u64 json_len | config JSON bytes |
//   u64 n_arrays | per array: u64 name_len, name, u32 ndims, u64 dims...,
//   float64 data (little-endian)
// Writes go through a temp file + rename so a crash never leaves a partial
// checkpoint behind.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace somix {

struct ArrayRecord {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;
};

struct CheckpointData {
  std::uint32_t version = 1;
  nlohmann::json config;
  std::vector<ArrayRecord> arrays;

  const ArrayRecord& find(const std::string& name) const;
  bool contains(const std::string& name) const;
};

inline constexpr std::uint32_t checkpoint_version = 1;

void save_checkpoint_file(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint_file(const std::string& path);

}  // namespace somix
