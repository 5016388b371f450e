#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace roughmkv::io {

// FNV-1a 64-bit. Artifact checksums are reproducibility fingerprints,
// not security hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64(const std::string& text);
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

// Shortest round-trip decimal formatting (17 significant digits).
std::string format_double(double value);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(std::span<const double> values);
  void row(std::span<const std::string> cells);
  void flush();

 private:
  std::string buffer_;
  std::filesystem::path path_;
  std::size_t columns_;
  bool flushed_ = false;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

// Dense binary tensor: one ASCII header line "<tag> <k0> <k1> ..." followed
// by raw little-endian doubles.
void write_tensor(const std::filesystem::path& path, const std::string& header,
                  std::span<const double> data);
struct Tensor {
  std::string header;
  std::vector<double> data;
};
Tensor read_tensor(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace roughmkv::io
