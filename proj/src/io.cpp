#include "mmpar/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <json.hpp>
#include <memory>
#include <sstream>

#include "mmpar/errors.hpp"

namespace mmpar::io {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'X', '1'};
constexpr std::size_t kHeaderBytes = 4 + 8 + 8;

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

MatrixFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv" ? MatrixFormat::kCsv : MatrixFormat::kBinary;
}

DenseMatrix parse_csv(const std::string& text) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view field =
          trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                  : comma - start));
      ++fields;
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (field.empty() || res.ec != std::errc() || res.ptr != last) {
        throw InputError("csv line " + std::to_string(line_no) + ", field " +
                         std::to_string(fields) + ": not a number: '" + std::string(field) + "'");
      }
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw InputError("csv line " + std::to_string(line_no) + ": ragged row with " +
                       std::to_string(fields) + " fields, expected " + std::to_string(cols));
    }
    ++rows;
  }
  return DenseMatrix(rows, cols, std::move(values));
}

std::string to_csv(const DenseMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      out += shortest(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

DenseMatrix parse_binary(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw InputError("binary matrix: wrong magic at offset 0, expected \"MMX1\"");
  }
  if (bytes.size() < kHeaderBytes) {
    throw InputError("binary matrix: truncated header at offset " + std::to_string(bytes.size()) +
                     ", need " + std::to_string(kHeaderBytes) + " bytes");
  }
  const std::uint64_t rows = get_u64(bytes, 4);
  const std::uint64_t cols = get_u64(bytes, 12);
  if (cols != 0 && rows > (std::numeric_limits<std::uint64_t>::max() / 8) / cols) {
    throw InputError("binary matrix: dimensions " + std::to_string(rows) + "x" +
                     std::to_string(cols) + " overflow at offset 4");
  }
  const std::uint64_t count = rows * cols;
  const std::uint64_t expected = kHeaderBytes + 8 * count;
  if (bytes.size() < expected) {
    throw InputError("binary matrix: truncated at offset " + std::to_string(bytes.size()) +
                     ", expected " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) {
    throw InputError("binary matrix: trailing bytes at offset " + std::to_string(expected));
  }
  std::vector<double> values(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    values[k] = std::bit_cast<double>(get_u64(bytes, kHeaderBytes + 8 * k));
  }
  return DenseMatrix(rows, cols, std::move(values));
}

std::string to_binary(const DenseMatrix& m) {
  std::string out(kMagic, 4);
  out.reserve(kHeaderBytes + 8 * m.size());
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double v : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("write to '" + path.string() + "' failed");
}

DenseMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == MatrixFormat::kCsv ? parse_csv(bytes) : parse_binary(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}

void save_matrix(const DenseMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
  write_file(path, format == MatrixFormat::kCsv ? to_csv(m) : to_binary(m));
}

void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  save_matrix(m, path, format_from_path(path));
}

std::string to_pgm(const DenseMatrix& image) {
  double peak = 0.0;
  for (double v : image.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InputError("pgm: entries must be finite and nonnegative");
    }
    peak = std::max(peak, v);
  }
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) +
                    "\n65535\n";
  for (double v : image.values()) {
    const auto level =
        peak > 0.0 ? static_cast<std::uint16_t>(std::lround(v / peak * 65535.0)) : std::uint16_t{0};
    out.push_back(static_cast<char>(level >> 8));
    out.push_back(static_cast<char>(level & 0xffu));
  }
  return out;
}

void write_pgm(const DenseMatrix& image, const std::filesystem::path& path) {
  write_file(path, to_pgm(image));
}

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw std::runtime_error("sha256: digest computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xfu]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["solver"] = solver;
  j["config"] = {{"epsilon", epsilon}, {"max_iters", max_iters}, {"seed", seed}};
  for (const auto& [key, value] : parameters) j["config"][key] = value;
  j["backend"] = backend;
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [path, digest] : input_digests) j["inputs"][path] = digest;
  j["converged"] = converged;
  j["final_objective"] = final_objective;
  j["iterations"] = iterations;
  j["wall_time_seconds"] = wall_time;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  write_file(path, manifest.to_json());
}

}  // namespace mmpar::io
