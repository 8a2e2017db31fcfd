#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "aparecium/models/layers.hpp"

namespace aparecium::models {

enum class Role { Processor, Encoder, Locator, Decoder, Extractor };

inline constexpr std::array<Role, 5> kAllRoles = {Role::Processor, Role::Encoder, Role::Locator, Role::Decoder,
                                                  Role::Extractor};

std::string to_string(Role role);
Role role_from_string(const std::string& s);

/// Architecture and size choices for all five networks. Defaults are the
/// full-size layout; `desk()` is the small CPU-friendly preset.
struct ModelConfig {
  int message_bits = 196;
  int pattern_size = 256;
  int image_size = 256;
  int locator_size = 320;

  std::vector<int> processor_channels = {256, 128, 128, 64, 64, 32, 16};

  int encoder_base = 32;
  int encoder_levels = 4;
  bool encoder_cover_skip = true;

  int decoder_base = 32;
  int decoder_levels = 4;

  std::string locator_variant = "light";

  std::string extractor_family = "convnext";
  std::vector<int> extractor_depths = {3, 3, 9, 3};
  std::vector<int> extractor_dims = {96, 192, 384, 768};

  static ModelConfig paper();
  static ModelConfig desk();

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  /// FNV-1a over the canonical JSON text.
  std::uint64_t hash() const;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr int64_t kInferenceChunk = 8;

/// A network tagged with its role and a freeze flag. Freezing disables
/// gradients and switches to eval mode.
struct ModelHandle {
  Role role;
  std::shared_ptr<Net> net;
  bool frozen = false;

  void freeze();
  void unfreeze();
  /// In eval mode without autograd, batches larger than kInferenceChunk run
  /// in slices to bound peak memory; the result is identical.
  torch::Tensor forward(const torch::Tensor& x) const;
  std::vector<torch::Tensor> parameters() const { return net->parameters(); }
  int64_t parameter_count() const;
  /// FNV-1a over parameter and buffer bytes.
  std::uint64_t checksum() const;
};

ModelHandle build_processor(const ModelConfig& cfg);
ModelHandle build_encoder(const ModelConfig& cfg);
ModelHandle build_locator(const ModelConfig& cfg);
ModelHandle build_decoder(const ModelConfig& cfg);
ModelHandle build_extractor(const ModelConfig& cfg);
ModelHandle build_role(Role role, const ModelConfig& cfg);

struct ModelSet {
  ModelConfig config;
  ModelHandle processor;
  ModelHandle encoder;
  ModelHandle locator;
  ModelHandle decoder;
  ModelHandle extractor;

  ModelHandle& at(Role role);
  const ModelHandle& at(Role role) const;

  void train(bool on = true);
  void eval() { train(false); }
};

/// Builds all five networks with torch's global generator seeded from `seed`.
ModelSet build_models(const ModelConfig& cfg, std::uint64_t seed);

/// Stage 1 trains processor and extractor; stage 2 freezes them and trains
/// the rest; stage 3 unfreezes everything. Frozen handles are left in eval
/// mode, the others in train mode.
void prepare_for_stage(ModelSet& models, int stage);

/// Roles that receive updates in `stage`.
std::vector<Role> trainable_roles(int stage);

}  // namespace aparecium::models
