#pragma once

#include "grid.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace en2 {

/*
 * EN2T tensor file, all integers little-endian:
 *   "EN2T" | u8 version (1) | u8 dtype (0 f32, 1 f64, 2 u8) | u8 is_complex |
 *   u8 ndim | ndim x u32 dims | payload
 * The payload is row-major; complex entries are interleaved (re, im).
 * Complex u8 is not a valid combination.
 */
enum class DType : std::uint8_t
{
  F32 = 0,
  F64 = 1,
  U8 = 2,
};

struct Tensor
{
  DType dtype = DType::F64;
  bool is_complex = false;
  std::vector<std::uint32_t> dims;
  // Element values in file order (interleaved for complex). u8 and f32 are
  // widened exactly.
  std::vector<double> values;

  Index element_count() const;
  Index payload_bytes() const;
};

std::vector<std::uint8_t> encode_en2t(Tensor const &t);
Tensor decode_en2t(std::vector<std::uint8_t> const &bytes);

void write_en2t(Tensor const &t, std::filesystem::path const &path);
Tensor read_en2t(std::filesystem::path const &path);

// ComplexGrid -> dims (C, H, W); BinaryGrid -> (H, W) u8; RealGrid -> (H, W).
Tensor to_tensor(ComplexGrid const &g, DType dtype = DType::F64);
Tensor to_tensor(BinaryGrid const &g);
Tensor to_tensor(RealGrid const &g, DType dtype = DType::F64);

ComplexGrid to_complex_grid(Tensor const &t); // accepts (H, W) or (C, H, W)
BinaryGrid to_binary_grid(Tensor const &t);

void write_en2t(ComplexGrid const &g, std::filesystem::path const &path, DType dtype = DType::F64);
void write_en2t(BinaryGrid const &g, std::filesystem::path const &path);
ComplexGrid read_complex_grid(std::filesystem::path const &path);
BinaryGrid read_binary_grid(std::filesystem::path const &path);

/*
 * 16-bit binary PGM (P5, maxval 65535, big-endian samples). Each value maps to
 * round(65535 * clamp(v / vmax, 0, 1)), vmax being the maximum over the mask
 * (or the whole grid); vmax <= 0 yields an all-zero image.
 */
std::vector<std::uint8_t> encode_pgm(RealGrid const &mag, BinaryGrid const *mask = nullptr);
void export_pgm(RealGrid const &mag, BinaryGrid const *mask, std::filesystem::path const &path);

std::vector<std::uint8_t> read_file(std::filesystem::path const &path);
void write_file(std::filesystem::path const &path, std::vector<std::uint8_t> const &bytes);

} // namespace en2
