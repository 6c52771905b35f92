#include "amsort/mot_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "amsort/error.hpp"

namespace amsort::io {

namespace {

constexpr const char* kFieldNames[] = {"frame", "id", "bb_left", "bb_top", "bb_width", "bb_height", "conf",
                                       "x", "y", "z"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void field_error(std::size_t idx, std::string_view text, const char* what) {
  throw DataError("field " + std::to_string(idx + 1) + " (" + kFieldNames[idx] + "): " + what + ": '" +
                  std::string(text) + "'");
}

int parse_int(std::string_view s, std::size_t idx) {
  s = trim(s);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) field_error(idx, s, "not an integer");
  return v;
}

double parse_real(std::string_view s, std::size_t idx) {
  s = trim(s);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) field_error(idx, s, "not a number");
  return v;
}

}  // namespace

MotRecord parse_mot_line(std::string_view line) {
  std::vector<std::string_view> fields;
  line = trim(line);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 7 && fields.size() != 10) {
    throw DataError("expected 7 or 10 comma-separated fields, got " + std::to_string(fields.size()));
  }
  MotRecord r;
  r.frame = parse_int(fields[0], 0);
  if (r.frame < 1) field_error(0, fields[0], "frame must be positive");
  r.id = parse_int(fields[1], 1);
  if (r.id < 1 && r.id != -1) field_error(1, fields[1], "id must be positive or -1");
  r.box.left = parse_real(fields[2], 2);
  r.box.top = parse_real(fields[3], 3);
  r.box.width = parse_real(fields[4], 4);
  r.box.height = parse_real(fields[5], 5);
  if (r.box.width < 0.0) field_error(4, fields[4], "negative width");
  if (r.box.height < 0.0) field_error(5, fields[5], "negative height");
  r.confidence = parse_real(fields[6], 6);
  for (std::size_t i = 7; i < fields.size(); ++i) parse_real(fields[i], i);
  return r;
}

std::string format_mot_line(const MotRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%d,%.2f,%.2f,%.2f,%.2f,%.6f", r.frame, r.id, r.box.left, r.box.top,
                r.box.width, r.box.height, r.confidence);
  return buf;
}

std::vector<MotRecord> read_mot_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<MotRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_mot_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_mot_file(const std::filesystem::path& path, const std::vector<MotRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) f << format_mot_line(r) << '\n';
  if (!f) throw DataError("failed writing " + path.string());
}

Sequence to_sequence(const std::vector<MotRecord>& records, const ImageDims& dims) {
  Sequence s;
  s.reserve(records.size());
  for (const auto& r : records) s.push_back({r.frame, r.id, normalize(r.box, dims), r.confidence});
  sort_sequence(s);
  return s;
}

std::vector<MotRecord> to_records(const Sequence& seq, const ImageDims& dims) {
  std::vector<MotRecord> out;
  out.reserve(seq.size());
  for (const auto& o : seq) out.push_back({o.frame, o.id, denormalize(o.box, dims), o.confidence});
  return out;
}

Sequence quantize(const Sequence& seq, const ImageDims& dims) {
  std::vector<MotRecord> parsed;
  for (const auto& r : to_records(seq, dims)) parsed.push_back(parse_mot_line(format_mot_line(r)));
  return to_sequence(parsed, dims);
}

}  // namespace amsort::io
