#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "holoseis/types.hpp"

// Binary grid-matrix files: 8-byte magic "HOLOSGMX", u32 version, u32 kind,
// then u64 rows, u64 cols (little-endian) and a row-major complex128 payload.
namespace holoseis::io {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class MatrixKind : std::uint32_t { generic = 0, green = 1, field = 2, kernel = 3, hologram = 4 };

void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

void write_matrix(std::ostream& os, const CMatrix& m, MatrixKind kind = MatrixKind::generic);
CMatrix read_matrix(std::istream& is, MatrixKind* kind = nullptr);

void save_matrix(const std::string& path, const CMatrix& m, MatrixKind kind = MatrixKind::generic);
CMatrix load_matrix(const std::string& path, MatrixKind* kind = nullptr);

// Plain CSV with a header row; numbers written with round-trip precision.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void ensure_directory(const std::string& dir);

}  // namespace holoseis::io
