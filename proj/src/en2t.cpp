#include "en2/en2t.hpp"

#include "en2/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace en2 {

namespace {

constexpr std::uint8_t kVersion = 1;
constexpr char kMagic[4] = {'E', 'N', '2', 'T'};

Index dtype_size(DType d)
{
  switch (d) {
  case DType::F32: return 4;
  case DType::F64: return 8;
  case DType::U8: return 1;
  }
  return 0;
}

template <typename U>
void put_le(std::vector<std::uint8_t> &out, U v)
{
  for (Index i = 0; i < sizeof(U); i++) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename U>
U get_le(std::uint8_t const *p)
{
  U v = 0;
  for (Index i = 0; i < sizeof(U); i++) {
    v |= static_cast<U>(p[i]) << (8 * i);
  }
  return v;
}

} // namespace

Index Tensor::element_count() const
{
  Index n = 1;
  for (auto d : dims) {
    n *= d;
  }
  return n * (is_complex ? 2 : 1);
}

Index Tensor::payload_bytes() const { return element_count() * dtype_size(dtype); }

std::vector<std::uint8_t> encode_en2t(Tensor const &t)
{
  if (t.dims.size() > 255) { throw ContractViolation("en2t: too many dimensions"); }
  if (t.dtype == DType::U8 && t.is_complex) { throw ContractViolation("en2t: complex u8 is not supported"); }
  if (t.values.size() != t.element_count()) { throw ContractViolation("en2t: value count does not match dims"); }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(t.is_complex ? 1 : 0);
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) {
    put_le<std::uint32_t>(out, d);
  }
  out.reserve(out.size() + t.payload_bytes());
  for (double v : t.values) {
    switch (t.dtype) {
    case DType::F32: put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); break;
    case DType::F64: put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); break;
    case DType::U8:
      if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) { throw ContractViolation("en2t: value not representable as u8"); }
      out.push_back(static_cast<std::uint8_t>(v));
      break;
    }
  }
  return out;
}

Tensor decode_en2t(std::vector<std::uint8_t> const &bytes)
{
  constexpr Index fixed = 8;
  if (bytes.size() < fixed) {
    throw FormatError("en2t: header needs " + std::to_string(fixed) + " bytes, file has " +
                      std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) { throw FormatError("en2t: bad magic"); }
  if (bytes[4] != kVersion) { throw FormatError("en2t: unsupported version " + std::to_string(bytes[4])); }
  if (bytes[5] > 2) { throw FormatError("en2t: unknown dtype " + std::to_string(bytes[5])); }
  if (bytes[6] > 1) { throw FormatError("en2t: is_complex must be 0 or 1"); }
  Tensor t;
  t.dtype = static_cast<DType>(bytes[5]);
  t.is_complex = bytes[6] == 1;
  if (t.dtype == DType::U8 && t.is_complex) { throw FormatError("en2t: complex u8 is not supported"); }
  Index const ndim = bytes[7];
  Index const header = fixed + 4 * ndim;
  if (bytes.size() < header) {
    throw FormatError("en2t: header needs " + std::to_string(header) + " bytes, file has " +
                      std::to_string(bytes.size()));
  }
  for (Index i = 0; i < ndim; i++) {
    t.dims.push_back(get_le<std::uint32_t>(bytes.data() + fixed + 4 * i));
  }
  auto const expected = header + t.payload_bytes();
  if (bytes.size() != expected) {
    throw FormatError("en2t: expected " + std::to_string(expected) + " bytes, file has " +
                      std::to_string(bytes.size()));
  }
  auto const n = t.element_count();
  t.values.resize(n);
  std::uint8_t const *p = bytes.data() + header;
  for (Index i = 0; i < n; i++) {
    switch (t.dtype) {
    case DType::F32: t.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i)); break;
    case DType::F64: t.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i)); break;
    case DType::U8: t.values[i] = p[i]; break;
    }
  }
  return t;
}

std::vector<std::uint8_t> read_file(std::filesystem::path const &path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) { throw IoError("cannot open " + path.string() + " for reading"); }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) { throw IoError("read failed: " + path.string()); }
  return bytes;
}

void write_file(std::filesystem::path const &path, std::vector<std::uint8_t> const &bytes)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) { throw IoError("cannot open " + path.string() + " for writing"); }
  f.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) { throw IoError("write failed: " + path.string()); }
}

void write_en2t(Tensor const &t, std::filesystem::path const &path) { write_file(path, encode_en2t(t)); }

Tensor read_en2t(std::filesystem::path const &path)
{
  try {
    return decode_en2t(read_file(path));
  } catch (FormatError const &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Tensor to_tensor(ComplexGrid const &g, DType dtype)
{
  if (dtype == DType::U8) { throw ContractViolation("en2t: complex grids need a float dtype"); }
  Tensor t;
  t.dtype = dtype;
  t.is_complex = true;
  t.dims = {static_cast<std::uint32_t>(g.channels()), static_cast<std::uint32_t>(g.height()),
            static_cast<std::uint32_t>(g.width())};
  t.values.resize(2 * g.size());
  for (Index i = 0; i < g.size(); i++) {
    t.values[2 * i] = g.re()[i];
    t.values[2 * i + 1] = g.im()[i];
  }
  return t;
}

Tensor to_tensor(BinaryGrid const &g)
{
  Tensor t;
  t.dtype = DType::U8;
  t.dims = {static_cast<std::uint32_t>(g.height), static_cast<std::uint32_t>(g.width)};
  t.values.assign(g.data.begin(), g.data.end());
  return t;
}

Tensor to_tensor(RealGrid const &g, DType dtype)
{
  Tensor t;
  t.dtype = dtype;
  t.dims = {static_cast<std::uint32_t>(g.height), static_cast<std::uint32_t>(g.width)};
  t.values = g.data;
  return t;
}

ComplexGrid to_complex_grid(Tensor const &t)
{
  if (!t.is_complex) { throw FormatError("en2t: expected a complex tensor"); }
  Shape s;
  if (t.dims.size() == 3) {
    s = {t.dims[0], t.dims[1], t.dims[2]};
  } else if (t.dims.size() == 2) {
    s = {1, t.dims[0], t.dims[1]};
  } else {
    throw FormatError("en2t: expected 2 or 3 dimensions for a complex grid");
  }
  ComplexGrid g(s);
  for (Index i = 0; i < g.size(); i++) {
    g.re()[i] = t.values[2 * i];
    g.im()[i] = t.values[2 * i + 1];
  }
  return g;
}

BinaryGrid to_binary_grid(Tensor const &t)
{
  if (t.is_complex || t.dims.size() != 2) { throw FormatError("en2t: expected a real 2D mask"); }
  BinaryGrid g(t.dims[0], t.dims[1]);
  for (Index i = 0; i < g.size(); i++) {
    double const v = t.values[i];
    if (v != 0.0 && v != 1.0) { throw FormatError("en2t: mask values must be 0 or 1"); }
    g.data[i] = static_cast<std::uint8_t>(v);
  }
  return g;
}

void write_en2t(ComplexGrid const &g, std::filesystem::path const &path, DType dtype)
{
  write_en2t(to_tensor(g, dtype), path);
}

void write_en2t(BinaryGrid const &g, std::filesystem::path const &path) { write_en2t(to_tensor(g), path); }

ComplexGrid read_complex_grid(std::filesystem::path const &path) { return to_complex_grid(read_en2t(path)); }

BinaryGrid read_binary_grid(std::filesystem::path const &path) { return to_binary_grid(read_en2t(path)); }

std::vector<std::uint8_t> encode_pgm(RealGrid const &mag, BinaryGrid const *mask)
{
  if (mask && (mask->height != mag.height || mask->width != mag.width)) {
    throw ContractViolation("export_pgm: mask shape mismatch");
  }
  double vmax = 0.0;
  bool any = false;
  for (Index i = 0; i < mag.size(); i++) {
    if (!std::isfinite(mag.data[i])) { throw ContractViolation("export_pgm: non-finite value"); }
    if (mask && !mask->data[i]) { continue; }
    vmax = any ? std::max(vmax, mag.data[i]) : mag.data[i];
    any = true;
  }
  std::string const header = "P5\n" + std::to_string(mag.width) + " " + std::to_string(mag.height) + "\n65535\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 2 * mag.size());
  for (double v : mag.data) {
    std::uint16_t s = 0;
    if (vmax > 0.0) { s = static_cast<std::uint16_t>(std::lround(65535.0 * std::clamp(v / vmax, 0.0, 1.0))); }
    out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  return out;
}

void export_pgm(RealGrid const &mag, BinaryGrid const *mask, std::filesystem::path const &path)
{
  write_file(path, encode_pgm(mag, mask));
}

} // namespace en2
