#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "amsort/geometry.hpp"
#include "amsort/sequence.hpp"

namespace amsort::io {

/// One MOTChallenge line: frame,id,bb_left,bb_top,bb_width,bb_height,conf[,x,y,z].
struct MotRecord {
  int frame = 0;
  int id = -1;
  PixelBox box;
  double confidence = 1.0;

  friend bool operator==(const MotRecord&, const MotRecord&) = default;
};

/// Throws DataError naming the 1-based field on malformed input. Frame must
/// be positive; id must be positive or -1. World coordinates are ignored.
MotRecord parse_mot_line(std::string_view line);

/// Pixel fields with 2 decimals, confidence with 6.
std::string format_mot_line(const MotRecord& r);

/// Skips blank lines; errors carry "<file>:<line>:".
std::vector<MotRecord> read_mot_file(const std::filesystem::path& path);
void write_mot_file(const std::filesystem::path& path, const std::vector<MotRecord>& records);

Sequence to_sequence(const std::vector<MotRecord>& records, const ImageDims& dims);
std::vector<MotRecord> to_records(const Sequence& seq, const ImageDims& dims);

/// Rounds every box through the text format, i.e. what a write/read cycle yields.
Sequence quantize(const Sequence& seq, const ImageDims& dims);

}  // namespace amsort::io
