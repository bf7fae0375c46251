#include "holoseis/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>

#include "holoseis/errors.hpp"

namespace holoseis::io {
namespace {

constexpr char kMagic[8] = {'H', 'O', 'L', 'O', 'S', 'G', 'M', 'X'};

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated grid-matrix stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated grid-matrix stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

void write_matrix(std::ostream& os, const CMatrix& m, MatrixKind kind) {
  os.write(kMagic, 8);
  write_u32(os, kFormatVersion);
  write_u32(os, static_cast<std::uint32_t>(kind));
  write_u64(os, std::uint64_t(m.rows()));
  write_u64(os, std::uint64_t(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      write_f64(os, m(i, j).real());
      write_f64(os, m(i, j).imag());
    }
  if (!os) throw IoError("failed writing grid-matrix stream");
}

CMatrix read_matrix(std::istream& is, MatrixKind* kind) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not a grid-matrix file");
  const std::uint32_t version = read_u32(is);
  if (version != kFormatVersion) throw IoError("unsupported grid-matrix version " + std::to_string(version));
  const std::uint32_t k = read_u32(is);
  if (kind) *kind = static_cast<MatrixKind>(k);
  const std::uint64_t rows = read_u64(is), cols = read_u64(is);
  if (rows > (1ull << 32) || cols > (1ull << 32)) throw IoError("implausible grid-matrix dimensions");
  CMatrix m(rows, cols);
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) {
      const double re = read_f64(is);
      const double im = read_f64(is);
      m(i, j) = {re, im};
    }
  return m;
}

void save_matrix(const std::string& path, const CMatrix& m, MatrixKind kind) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_matrix(os, m, kind);
}

CMatrix load_matrix(const std::string& path, MatrixKind* kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_matrix(is, kind);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace holoseis::io
