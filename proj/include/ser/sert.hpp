#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ser/tensor.hpp"

namespace ser {

// Feature tensor file: magic "SERT", version u32, ndim u32, dims u32*ndim,
// payload little-endian f32 row-major.
inline constexpr std::uint32_t kSertVersion = 1;

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& detail)
      : std::runtime_error("format: " + detail) {}
};

void write_sert(std::ostream& out, const Tensor& t);
Tensor read_sert(std::istream& in);

std::vector<std::uint8_t> sert_to_bytes(const Tensor& t);
void save_sert(const std::string& path, const Tensor& t);
Tensor load_sert(const std::string& path);

// Little-endian scalar helpers shared by the binary formats.
void write_u16le(std::ostream& out, std::uint16_t v);
void write_u32le(std::ostream& out, std::uint32_t v);
void write_f32le(std::ostream& out, float v);
std::uint16_t read_u16le(std::istream& in);
std::uint32_t read_u32le(std::istream& in);
float read_f32le(std::istream& in);

}  // namespace ser
