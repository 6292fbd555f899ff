#include "text_record.hpp"

#include <cmath>

namespace mtd::detail {

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool parse_int(std::string_view text, long long& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

Record parse_record(std::string_view text, std::string_view source, int line) {
  Record rec;
  rec.source = std::string(source);
  rec.line = line;
  bool first = true;
  for (auto token : split(trim(text), ' ')) {
    if (token.empty()) continue;
    if (first) {
      rec.kind = std::string(token);
      first = false;
      continue;
    }
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      rec.fail("expected key=value, got '" + std::string(token) + "'");
    }
    rec.fields.emplace_back(std::string(token.substr(0, eq)),
                            std::string(token.substr(eq + 1)));
  }
  if (first) rec.fail("empty record");
  return rec;
}

double Record::get_double(std::string_view key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) fail("field '" + std::string(key) + "' is not a number");
  return v;
}

long long Record::get_int(std::string_view key) const {
  long long v = 0;
  if (!parse_int(get(key), v)) fail("field '" + std::string(key) + "' is not an integer");
  return v;
}

std::vector<double> Record::get_doubles(std::string_view key, std::size_t count) const {
  const auto parts = split(get(key), ',');
  if (parts.size() != count) {
    fail("field '" + std::string(key) + "' expects " + std::to_string(count) + " values");
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!parse_double(parts[i], out[i])) {
      fail("field '" + std::string(key) + "' has a non-numeric component");
    }
  }
  return out;
}

}  // namespace mtd::detail
