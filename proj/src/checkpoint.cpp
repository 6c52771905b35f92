#include "amsort/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "amsort/error.hpp"

namespace amsort::ad {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  bool done() const { return pos_ == s_.size(); }

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8, "f64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::string bytes(std::size_t n) {
    need(n, "name");
    std::string r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (s_.size() - pos_ < n) {
      throw DataError("checkpoint truncated while reading " + std::string(what) + " at byte " +
                      std::to_string(pos_));
    }
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedArray>& arrays) {
  std::string out(kCheckpointMagic, 8);
  for (const auto& a : arrays) {
    if (numel(a.shape) != a.values.size()) {
      throw std::invalid_argument("checkpoint entry '" + a.name + "' has inconsistent shape");
    }
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_u32(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : a.values) put_f64(out, v);
  }
  return out;
}

std::vector<NamedArray> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) {
    throw DataError("not a checkpoint: missing AMSORT01 magic");
  }
  std::vector<NamedArray> out;
  // Reader holds a reference, keep the body alive.
  const std::string body = bytes.substr(8);
  Reader rd(body);
  while (!rd.done()) {
    NamedArray a;
    a.name = rd.bytes(rd.u32());
    const std::uint32_t rank = rd.u32();
    for (std::uint32_t i = 0; i < rank; ++i) a.shape.push_back(rd.u32());
    const std::size_t n = numel(a.shape);
    a.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) a.values.push_back(rd.f64());
    out.push_back(std::move(a));
  }
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path.string());
  const std::string bytes = encode_checkpoint(arrays);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing checkpoint: " + path.string());
}

std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace amsort::ad
