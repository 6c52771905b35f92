#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "amsort/autodiff.hpp"

namespace amsort::ad {

// Binary layout: "AMSORT01", then per parameter
//   u32 name length | UTF-8 name | u32 rank | u32 dims... | f64 values (row-major)
// with every integer and real little-endian.
inline constexpr char kCheckpointMagic[] = "AMSORT01";

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const std::vector<NamedArray>& arrays);
std::vector<NamedArray> decode_checkpoint(const std::string& bytes);

}  // namespace amsort::ad
