#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmpar/dense_matrix.hpp"

namespace mmpar::io {

enum class MatrixFormat { kCsv, kBinary };

// ".csv" (any case) selects CSV; everything else is the binary format.
MatrixFormat format_from_path(const std::filesystem::path& path);

// CSV: one row per line, comma-separated decimal reals. Blank lines are
// skipped. Errors carry the line (and field) number.
DenseMatrix parse_csv(const std::string& text);
std::string to_csv(const DenseMatrix& m);

// Binary: "MMX1", u64 LE rows, u64 LE cols, rows*cols f64 LE, row-major.
// Errors carry the byte offset.
DenseMatrix parse_binary(const std::string& bytes);
std::string to_binary(const DenseMatrix& m);

DenseMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
DenseMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const DenseMatrix& m, const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const DenseMatrix& m, const std::filesystem::path& path);

// 16-bit binary PGM, maxval 65535; the largest entry maps to 65535.
std::string to_pgm(const DenseMatrix& image);
void write_pgm(const DenseMatrix& image, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::filesystem::path& path);

struct RunManifest {
  std::string solver;
  double epsilon = 0.0;
  std::uint64_t max_iters = 0;
  std::uint64_t seed = 0;
  std::map<std::string, double> parameters;  // mu, rank, dim, ...
  std::string backend;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  bool converged = false;
  double final_objective = 0.0;
  std::uint64_t iterations = 0;
  double wall_time = 0.0;

  std::string to_json() const;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace mmpar::io
