#include "aparecium/core/kv.hpp"

#include <charconv>
#include <sstream>

#include "aparecium/core/errors.hpp"

namespace aparecium {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t[]");
  const auto e = s.find_last_not_of(" \t[]");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("config key '" + key + "': cannot read '" + value + "' as " + what);
}

std::vector<std::string> split(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(trim(value));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

double kv_double(const std::string& key, const std::string& value) {
  const auto t = trim(value);
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) bad(key, value, "a number");
    return v;
  } catch (const std::logic_error&) {
    bad(key, value, "a number");
  }
}

long long kv_int(const std::string& key, const std::string& value) {
  const auto t = trim(value);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) bad(key, value, "an integer");
  return v;
}

bool kv_bool(const std::string& key, const std::string& value) {
  const auto t = trim(value);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  bad(key, value, "a boolean");
}

std::vector<double> kv_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& s : split(value)) out.push_back(kv_double(key, s));
  return out;
}

std::vector<int> kv_ints(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const auto& s : split(value)) out.push_back(static_cast<int>(kv_int(key, s)));
  return out;
}

std::string kv_format(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string kv_format(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + kv_format(x);
  return s;
}

std::string kv_format(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

}  // namespace aparecium
