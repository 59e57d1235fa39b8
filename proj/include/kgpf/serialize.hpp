#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace kgpf {

// Little-endian binary writer/reader for checkpoint files.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);
  void write_bytes(const void* data, std::size_t n);
  void write_u32(std::uint32_t v);
  void write_u64(std::uint64_t v);
  void write_doubles(const std::vector<double>& v);
  void write_string(const std::string& s);  // u64 length + bytes

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);
  void read_bytes(void* data, std::size_t n);
  std::uint32_t read_u32();
  std::uint64_t read_u64();
  void read_doubles(std::vector<double>& v);  // v.size() elements
  std::string read_string();

 private:
  std::ifstream in_;
  std::string path_;
};

// FNV-1a 64 over the file contents, hex encoded. Integrity check for the
// embedding file referenced by policy checkpoints.
std::string file_content_hash(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace kgpf
