#include "dmsn/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dmsn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view origin) {
  KeyValueConfig cfg;
  cfg.origin_ = std::string(origin);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(cfg.origin_ + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw std::invalid_argument(cfg.origin_ + ":" + std::to_string(line_no) + ": empty key");
    if (cfg.contains(key)) {
      throw std::invalid_argument(cfg.origin_ + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    cfg.set(std::move(key), std::move(value));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const std::string& KeyValueConfig::get(std::string_view key) const {
  auto it = values_.find(std::string(key));
  if (it == values_.end()) throw std::invalid_argument(origin_ + ": missing key '" + std::string(key) + "'");
  return it->second;
}

void KeyValueConfig::set(std::string key, std::string value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[std::move(key)] = std::move(value);
}

void KeyValueConfig::reject_unknown(const std::vector<std::string_view>& allowed) const {
  for (const auto& k : order_) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw std::invalid_argument(origin_ + ": unknown key '" + k + "'");
    }
  }
}

std::string KeyValueConfig::to_text() const {
  std::string out;
  for (const auto& k : order_) out += k + "=" + values_.at(k) + "\n";
  return out;
}

long long parse_int(std::string_view text, std::string_view key) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("key '" + std::string(key) + "': expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text, std::string_view key) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) {
    throw std::invalid_argument("key '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return v;
}

std::vector<int> parse_int_list(std::string_view text, std::string_view key) {
  std::vector<int> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(static_cast<int>(parse_int(trim(text.substr(0, comma)), key)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace dmsn
