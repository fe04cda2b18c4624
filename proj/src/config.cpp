#include "pixelgame/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "pixelgame/error.hpp"

namespace pixelgame {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  fail(ErrorKind::Config, "key '" + std::string(key) + "': expected " + expected + ", got '" +
                              std::string(value) + "'");
}

template <typename N>
N parse_number(std::string_view key, std::string_view value, const char* expected) {
  const std::string_view v = trim(value);
  N out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size()) {
    bad_value(key, value, expected);
  }
  return out;
}

}  // namespace

KeyValueDocument KeyValueDocument::parse(std::string_view text, const std::string& origin) {
  KeyValueDocument doc;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Config, where + ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) fail(ErrorKind::Config, where + ": empty key");
    if (!seen.insert(key).second) fail(ErrorKind::Config, where + ": duplicate key '" + key + "'");
    doc.entries_.emplace_back(std::move(key), std::move(value));
  }
  return doc;
}

KeyValueDocument KeyValueDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

int parse_int(std::string_view key, std::string_view value) {
  return parse_number<int>(key, value, "an integer");
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  return parse_number<std::uint64_t>(key, value, "a non-negative integer");
}

double parse_double(std::string_view key, std::string_view value) {
  return parse_number<double>(key, value, "a number");
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string_view v = trim(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, value, "a boolean");
}

std::vector<double> parse_double_list(std::string_view key, std::string_view value) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const auto item =
        value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    out.push_back(parse_double(key, item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace pixelgame
