#include "lrgemm/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lrgemm/error.hpp"

namespace lrgemm {

namespace {

constexpr char kLrgmMagic[4] = {'L', 'R', 'G', 'M'};
constexpr char kLrfbMagic[4] = {'L', 'R', 'F', 'B'};

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits;
  if constexpr (std::is_same_v<T, double>) bits = std::bit_cast<std::uint64_t>(value);
  else bits = static_cast<std::uint64_t>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (bytes.size() < offset + sizeof(T)) throw ParseError("truncated container", 0);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= std::uint64_t{bytes[offset + i]} << (8 * i);
  offset += sizeof(T);
  if constexpr (std::is_same_v<T, double>) return std::bit_cast<double>(bits);
  else return static_cast<T>(bits);
}

void put_header(std::vector<std::uint8_t>& out, std::size_t rows, std::size_t cols, Precision tag) {
  out.insert(out.end(), std::begin(kLrgmMagic), std::end(kLrgmMagic));
  put<std::uint16_t>(out, kContainerVersion);
  put<std::uint64_t>(out, rows);
  put<std::uint64_t>(out, cols);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(tag));
}

void expect_magic(std::span<const std::uint8_t> bytes, std::size_t& offset, const char (&magic)[4]) {
  if (bytes.size() < offset + 4 || std::memcmp(bytes.data() + offset, magic, 4) != 0) {
    throw ParseError("bad magic: expected " + std::string(magic, 4), 0);
  }
  offset += 4;
  const auto version = get<std::uint16_t>(bytes, offset);
  if (version != kContainerVersion) {
    throw ParseError("unsupported container version " + std::to_string(version), 0);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_lrgm(const DenseMatrix& m) {
  if (m.precision() == Precision::fp8) {
    throw InvalidArgument("encode_lrgm: fp8-tagged matrices need their Fp8Tensor (scale and format)");
  }
  std::vector<std::uint8_t> out;
  out.reserve(27 + 8 * m.size());
  put_header(out, m.rows(), m.cols(), m.precision());
  for (double v : m.data()) put<double>(out, v);
  return out;
}

std::vector<std::uint8_t> encode_lrgm(const Fp8Tensor& q) {
  validate(q);
  const DenseMatrix grid = decoded_grid_values(q);
  std::vector<std::uint8_t> out;
  out.reserve(35 + 8 * grid.size());
  put_header(out, q.rows, q.cols, Precision::fp8);
  for (double v : grid.data()) put<double>(out, v);
  put<double>(out, q.scale);
  return out;
}

LrgmContent decode_lrgm(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  expect_magic(bytes, offset, kLrgmMagic);
  const auto rows = get<std::uint64_t>(bytes, offset);
  const auto cols = get<std::uint64_t>(bytes, offset);
  const auto tag = get<std::uint8_t>(bytes, offset);
  if (tag > static_cast<std::uint8_t>(Precision::fp8)) {
    throw ParseError("unknown precision tag " + std::to_string(tag), 0);
  }
  if (rows == 0 || cols == 0 || rows > (1ull << 32) || cols > (1ull << 32)) {
    throw ParseError("bad matrix shape in container", 0);
  }
  const std::uint64_t count = rows * cols;
  if ((bytes.size() - offset) / 8 < count) throw ParseError("truncated container", 0);
  std::vector<double> data(count);
  for (auto& v : data) v = get<double>(bytes, offset);
  const auto precision = static_cast<Precision>(tag);
  if (precision != Precision::fp8) {
    try {
      return {DenseMatrix(rows, cols, std::move(data), precision), std::nullopt};
    } catch (const InvalidArgument& e) {
      throw ParseError(std::string("invalid matrix payload: ") + e.what(), 0);
    }
  }
  const double scale = get<double>(bytes, offset);
  double absmax = 0.0;
  for (double v : data) absmax = std::max(absmax, std::abs(v));
  const Fp8Format& format = absmax > e4m3().max_finite ? e5m2() : e4m3();
  try {
    Fp8Tensor q = from_grid_values(DenseMatrix(rows, cols, std::move(data)), scale, format);
    DenseMatrix m = dequantize(q);
    return {std::move(m), std::move(q)};
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid fp8 payload: ") + e.what(), 0);
  }
}

std::vector<std::uint8_t> encode_lrfb(const SvdFactors& f) {
  if (f.u.cols() != f.rank() || f.vt.rows() != f.rank() || f.rank() == 0) {
    throw DimensionError("encode_lrfb: factor shapes disagree with rank " + std::to_string(f.rank()));
  }
  std::vector<std::uint8_t> out(std::begin(kLrfbMagic), std::end(kLrfbMagic));
  put<std::uint16_t>(out, kContainerVersion);
  put<std::uint64_t>(out, f.rank());
  const auto append = [&](const std::vector<std::uint8_t>& part) { out.insert(out.end(), part.begin(), part.end()); };
  // fp8-tagged factors are stored as plain 64-bit values.
  const auto plain = [](const DenseMatrix& m) {
    if (m.precision() != Precision::fp8) return m;
    return DenseMatrix(m.rows(), m.cols(), std::vector<double>(m.data().begin(), m.data().end()));
  };
  append(encode_lrgm(plain(f.u)));
  append(encode_lrgm(DenseMatrix(1, f.rank(), f.s)));
  append(encode_lrgm(plain(f.vt)));
  return out;
}

SvdFactors decode_lrfb(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  expect_magic(bytes, offset, kLrfbMagic);
  const auto rank = get<std::uint64_t>(bytes, offset);
  DenseMatrix u = decode_lrgm(bytes, offset).matrix;
  DenseMatrix s = decode_lrgm(bytes, offset).matrix;
  DenseMatrix vt = decode_lrgm(bytes, offset).matrix;
  if (offset != bytes.size()) throw ParseError("trailing bytes after factor bundle", 0);
  if (u.cols() != rank || s.rows() != 1 || s.cols() != rank || vt.rows() != rank) {
    throw ParseError("factor bundle shapes disagree with rank " + std::to_string(rank), 0);
  }
  return {std::move(u), std::vector<double>(s.data().begin(), s.data().end()), std::move(vt)};
}

ContainerKind detect_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kLrgmMagic, 4) == 0) return ContainerKind::matrix;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kLrfbMagic, 4) == 0) return ContainerKind::factor_bundle;
  throw ParseError("unrecognized container (expected LRGM or LRFB magic)", 0);
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

void write_binary_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("error writing " + path.string());
}

void write_lrgm(const std::filesystem::path& path, const DenseMatrix& m) { write_binary_file(path, encode_lrgm(m)); }

void write_lrgm(const std::filesystem::path& path, const Fp8Tensor& q) { write_binary_file(path, encode_lrgm(q)); }

LrgmContent read_lrgm(const std::filesystem::path& path) {
  const auto bytes = read_binary_file(path);
  std::size_t offset = 0;
  LrgmContent content = decode_lrgm(bytes, offset);
  if (offset != bytes.size()) throw ParseError(path.string() + ": trailing bytes after matrix", 0);
  return content;
}

void write_lrfb(const std::filesystem::path& path, const SvdFactors& f) { write_binary_file(path, encode_lrfb(f)); }

SvdFactors read_lrfb(const std::filesystem::path& path) { return decode_lrfb(read_binary_file(path)); }

}  // namespace lrgemm
