#include "ser/sert.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace ser {

void write_u16le(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 4);
}

void write_f32le(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32le(out, bits);
}

namespace {

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError(std::string("truncated while reading ") + what);
}

}  // namespace

std::uint16_t read_u16le(std::istream& in) {
  unsigned char bytes[2];
  read_exact(in, reinterpret_cast<char*>(bytes), 2, "u16");
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

std::uint32_t read_u32le(std::istream& in) {
  unsigned char bytes[4];
  read_exact(in, reinterpret_cast<char*>(bytes), 4, "u32");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

float read_f32le(std::istream& in) {
  const std::uint32_t bits = read_u32le(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void write_sert(std::ostream& out, const Tensor& t) {
  out.write("SERT", 4);
  write_u32le(out, kSertVersion);
  write_u32le(out, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t d : t.dims) write_u32le(out, static_cast<std::uint32_t>(d));
  for (double v : t.data) write_f32le(out, static_cast<float>(v));
}

Tensor read_sert(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4, "magic");
  if (std::memcmp(magic, "SERT", 4) != 0) throw FormatError("bad SERT magic");
  const std::uint32_t version = read_u32le(in);
  if (version != kSertVersion)
    throw FormatError("unsupported SERT version " + std::to_string(version));
  const std::uint32_t ndim = read_u32le(in);
  if (ndim > 8) throw FormatError("implausible SERT ndim " + std::to_string(ndim));
  std::vector<std::size_t> dims(ndim);
  for (auto& d : dims) d = read_u32le(in);
  Tensor t(dims);
  for (double& v : t.data) v = read_f32le(in);
  return t;
}

std::vector<std::uint8_t> sert_to_bytes(const Tensor& t) {
  std::ostringstream out(std::ios::binary);
  write_sert(out, t);
  const std::string s = out.str();
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

void save_sert(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_sert(out, t);
  if (!out) throw std::runtime_error("short write to " + path);
}

Tensor load_sert(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_sert(in);
}

}  // namespace ser
