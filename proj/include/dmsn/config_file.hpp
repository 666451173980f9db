#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dmsn {

// Flat "key=value" text. Blank lines and lines starting with '#' are skipped.
// Keys keep their first-seen order; a repeated key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view origin = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool contains(std::string_view key) const { return values_.count(std::string(key)) != 0; }
  const std::string& get(std::string_view key) const;
  void set(std::string key, std::string value);
  const std::vector<std::string>& keys() const noexcept { return order_; }

  // Throws std::invalid_argument naming the first key not in `allowed`.
  void reject_unknown(const std::vector<std::string_view>& allowed) const;

  std::string to_text() const;

 private:
  std::string origin_;
  std::vector<std::string> order_;
  std::map<std::string, std::string> values_;
};

long long parse_int(std::string_view text, std::string_view key);
double parse_double(std::string_view text, std::string_view key);
std::vector<int> parse_int_list(std::string_view text, std::string_view key);

}  // namespace dmsn
