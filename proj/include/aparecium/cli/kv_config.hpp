#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aparecium/core/kv.hpp"

namespace aparecium::cli {

/// Environment variables read by the CLI.
inline constexpr const char* kEnvRunRoot = "APARECIUM_RUN_ROOT";
inline constexpr const char* kEnvDevice = "APARECIUM_DEVICE";
/// `key=value` pairs separated by ';' or newlines, applied between the
/// config file and command-line flags.
inline constexpr const char* kEnvOverrides = "APARECIUM_OVERRIDES";

/// Flattens a YAML mapping into dotted keys; sequences become comma lists.
KeyValues read_kv_file(const std::filesystem::path& path);
KeyValues parse_kv_yaml(const std::string& text);

/// Parses "key=value" (throws ConfigError when '=' is missing).
std::pair<std::string, std::string> parse_assignment(const std::string& text);
KeyValues parse_env_overrides(const std::string& text);

/// Nested YAML rendering of dotted keys.
std::string to_yaml(const KeyValues& kv);

struct Layers {
  std::filesystem::path file;
  std::vector<std::string> sets;
  bool use_env = true;
};

/// file < environment < --set flags. The `profile` key, if present in any
/// layer, is returned separately by `profile_of`.
KeyValues merge_layers(const Layers& layers);
std::string profile_of(const KeyValues& kv, const std::string& flag, const std::string& fallback);

/// Run root from the environment, default "runs".
std::filesystem::path run_root();
/// Device name from the environment, default "cpu". Only "cpu" is supported.
std::string device();

}  // namespace aparecium::cli
