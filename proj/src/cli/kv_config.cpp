#include "aparecium/cli/kv_config.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "aparecium/core/errors.hpp"

namespace aparecium::cli {

namespace fs = std::filesystem;

namespace {

void flatten(const YAML::Node& node, const std::string& prefix, KeyValues& out) {
  switch (node.Type()) {
    case YAML::NodeType::Map:
      for (const auto& item : node) {
        const auto key = item.first.as<std::string>();
        flatten(item.second, prefix.empty() ? key : prefix + "." + key, out);
      }
      break;
    case YAML::NodeType::Sequence: {
      std::string joined;
      for (const auto& item : node) {
        if (!item.IsScalar()) throw ConfigError("config key '" + prefix + "': lists may only hold scalars");
        joined += (joined.empty() ? "" : ",") + item.as<std::string>();
      }
      out[prefix] = joined;
      break;
    }
    case YAML::NodeType::Scalar: out[prefix] = node.as<std::string>(); break;
    case YAML::NodeType::Null: out[prefix] = ""; break;
    default: break;
  }
}

}  // namespace

KeyValues parse_kv_yaml(const std::string& text) {
  KeyValues out;
  try {
    const auto root = YAML::Load(text);
    if (root.IsNull()) return out;
    if (!root.IsMap()) throw ConfigError("config file must be a key-value mapping");
    flatten(root, "", out);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  return out;
}

KeyValues read_kv_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kv_yaml(ss.str());
}

std::pair<std::string, std::string> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + text + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

KeyValues parse_env_overrides(const std::string& text) {
  KeyValues out;
  std::string item;
  for (char c : text + ";") {
    if (c == ';' || c == '\n') {
      if (item.find_first_not_of(" \t\r") != std::string::npos) out.insert_or_assign(parse_assignment(item).first, parse_assignment(item).second);
      item.clear();
    } else {
      item += c;
    }
  }
  return out;
}

namespace {

struct KeyTree {
  std::string value;
  std::map<std::string, KeyTree> children;
};

void emit_tree(YAML::Emitter& em, const KeyTree& t) {
  em << YAML::BeginMap;
  for (const auto& [k, child] : t.children) {
    em << YAML::Key << k << YAML::Value;
    if (child.children.empty()) em << child.value;
    else emit_tree(em, child);
  }
  em << YAML::EndMap;
}

}  // namespace

std::string to_yaml(const KeyValues& kv) {
  KeyTree root;
  for (const auto& [key, value] : kv) {
    KeyTree* node = &root;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) node = &node->children[part];
    node->value = value;
  }
  YAML::Emitter em;
  emit_tree(em, root);
  return std::string(em.c_str()) + "\n";
}

KeyValues merge_layers(const Layers& layers) {
  KeyValues kv;
  if (!layers.file.empty())
    for (auto& [k, v] : read_kv_file(layers.file)) kv[k] = v;
  if (layers.use_env) {
    if (const char* env = std::getenv(kEnvOverrides))
      for (auto& [k, v] : parse_env_overrides(env)) kv[k] = v;
  }
  for (const auto& s : layers.sets) {
    auto [k, v] = parse_assignment(s);
    kv[k] = v;
  }
  return kv;
}

std::string profile_of(const KeyValues& kv, const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (auto it = kv.find("profile"); it != kv.end() && !it->second.empty()) return it->second;
  return fallback;
}

fs::path run_root() {
  const char* env = std::getenv(kEnvRunRoot);
  return env && *env ? fs::path(env) : fs::path("runs");
}

std::string device() {
  const char* env = std::getenv(kEnvDevice);
  const std::string d = env && *env ? env : "cpu";
  if (d != "cpu") throw ConfigError(std::string(kEnvDevice) + "=" + d + " is not supported; this build runs on cpu");
  return d;
}

}  // namespace aparecium::cli
