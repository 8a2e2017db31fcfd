#pragma once

#include <map>
#include <string>
#include <vector>

namespace aparecium {

/// Flattened configuration tree: dotted keys to scalar text. Lists are
/// comma-separated.
using KeyValues = std::map<std::string, std::string>;

double kv_double(const std::string& key, const std::string& value);
long long kv_int(const std::string& key, const std::string& value);
bool kv_bool(const std::string& key, const std::string& value);
std::vector<double> kv_doubles(const std::string& key, const std::string& value);
std::vector<int> kv_ints(const std::string& key, const std::string& value);

std::string kv_format(double v);
std::string kv_format(const std::vector<double>& v);
std::string kv_format(const std::vector<int>& v);

}  // namespace aparecium
