#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pixelgame {

/// Flat `key = value` text. Blank lines and lines starting with '#' are
/// ignored; a repeated key is an error.
class KeyValueDocument {
 public:
  static KeyValueDocument parse(std::string_view text, const std::string& origin = "<text>");
  static KeyValueDocument load(const std::filesystem::path& path);

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

int parse_int(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
double parse_double(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);
/// Comma-separated reals.
std::vector<double> parse_double_list(std::string_view key, std::string_view value);

}  // namespace pixelgame
