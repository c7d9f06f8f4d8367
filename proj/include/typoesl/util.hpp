#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace typoesl {

/// 64-bit FNV-1a. Stable across platforms; used for content fingerprints.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);
/// Fingerprint of a file's bytes, or of every regular file under a directory.
std::string content_hash(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::string read_file(const std::filesystem::path& path);

/// Fixed-precision decimal rendering used by every report writer.
std::string format_double(double value, int precision);

}  // namespace typoesl
