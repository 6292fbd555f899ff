#pragma once

// Helpers for the line-delimited `kind key=value ...` record files shared by
// the world, run log and manifest formats.

#include <charconv>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtd/errors.hpp"

namespace mtd::detail {

struct Record {
  std::string source;
  int line = 0;
  std::string kind;
  std::vector<std::pair<std::string, std::string>> fields;

  const std::string& get(std::string_view key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return v;
    }
    throw ParseError(source, line, "missing field '" + std::string(key) + "'");
  }

  bool has(std::string_view key) const {
    for (const auto& [k, v] : fields) {
      if (k == key) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(source, line, what);
  }

  double get_double(std::string_view key) const;
  long long get_int(std::string_view key) const;
  std::vector<double> get_doubles(std::string_view key, std::size_t count) const;
};

Record parse_record(std::string_view text, std::string_view source, int line);

bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace mtd::detail
