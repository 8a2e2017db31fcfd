#include "aparecium/models/zoo.hpp"

#include <cstring>

#include "aparecium/core/errors.hpp"
#include "aparecium/models/extractor.hpp"
#include "aparecium/models/processor.hpp"
#include "aparecium/models/u2net.hpp"
#include "aparecium/models/unet.hpp"

namespace aparecium::models {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::Processor: return "processor";
    case Role::Encoder: return "encoder";
    case Role::Locator: return "locator";
    case Role::Decoder: return "decoder";
    case Role::Extractor: return "extractor";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  for (Role r : kAllRoles)
    if (to_string(r) == s) return r;
  throw ConfigError("unknown role '" + s + "'");
}

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.message_bits = 64;
  c.pattern_size = 64;
  c.image_size = 128;
  c.locator_size = 112;
  c.processor_channels = {128, 64, 64, 32, 16};
  c.encoder_base = 16;
  c.encoder_levels = 3;
  c.decoder_base = 16;
  c.decoder_levels = 3;
  c.locator_variant = "tiny";
  c.extractor_depths = {1, 1, 2, 1};
  c.extractor_dims = {32, 64, 128, 256};
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"message_bits", message_bits},
          {"pattern_size", pattern_size},
          {"image_size", image_size},
          {"locator_size", locator_size},
          {"processor_channels", processor_channels},
          {"encoder_base", encoder_base},
          {"encoder_levels", encoder_levels},
          {"encoder_cover_skip", encoder_cover_skip},
          {"decoder_base", decoder_base},
          {"decoder_levels", decoder_levels},
          {"locator_variant", locator_variant},
          {"extractor_family", extractor_family},
          {"extractor_depths", extractor_depths},
          {"extractor_dims", extractor_dims}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.message_bits = j.at("message_bits").get<int>();
    c.pattern_size = j.at("pattern_size").get<int>();
    c.image_size = j.at("image_size").get<int>();
    c.locator_size = j.at("locator_size").get<int>();
    c.processor_channels = j.at("processor_channels").get<std::vector<int>>();
    c.encoder_base = j.at("encoder_base").get<int>();
    c.encoder_levels = j.at("encoder_levels").get<int>();
    c.encoder_cover_skip = j.at("encoder_cover_skip").get<bool>();
    c.decoder_base = j.at("decoder_base").get<int>();
    c.decoder_levels = j.at("decoder_levels").get<int>();
    c.locator_variant = j.at("locator_variant").get<std::string>();
    c.extractor_family = j.at("extractor_family").get<std::string>();
    c.extractor_depths = j.at("extractor_depths").get<std::vector<int>>();
    c.extractor_dims = j.at("extractor_dims").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

std::uint64_t ModelConfig::hash() const {
  const std::string text = to_json().dump();
  return fnv1a(text.data(), text.size());
}

void ModelHandle::freeze() {
  frozen = true;
  for (auto& p : net->parameters()) p.set_requires_grad(false);
  net->eval();
}

void ModelHandle::unfreeze() {
  frozen = false;
  for (auto& p : net->parameters()) p.set_requires_grad(true);
  net->train();
}

torch::Tensor ModelHandle::forward(const torch::Tensor& x) const {
  if (torch::GradMode::is_enabled() || net->is_training() || x.dim() == 0 || x.size(0) <= kInferenceChunk)
    return net->forward(x);
  std::vector<torch::Tensor> parts;
  for (const auto& slice : x.split(kInferenceChunk)) parts.push_back(net->forward(slice));
  return torch::cat(parts);
}

int64_t ModelHandle::parameter_count() const { return models::parameter_count(*net); }

std::uint64_t ModelHandle::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const torch::Tensor& t) {
    auto c = t.detach().contiguous().cpu();
    h = fnv1a(c.data_ptr(), c.numel() * c.element_size(), h);
  };
  for (const auto& p : net->parameters()) mix(p);
  for (const auto& b : net->buffers()) mix(b);
  return h;
}

ModelHandle build_processor(const ModelConfig& cfg) {
  return {Role::Processor, std::make_shared<MessageProcessor>(cfg.message_bits, cfg.processor_channels,
                                                              cfg.pattern_size)};
}

ModelHandle build_encoder(const ModelConfig& cfg) {
  return {Role::Encoder, std::make_shared<WatermarkEncoder>(cfg.encoder_base, cfg.encoder_levels,
                                                            cfg.encoder_cover_skip)};
}

ModelHandle build_locator(const ModelConfig& cfg) {
  return {Role::Locator, std::make_shared<U2Net>(U2NetLayout::named(cfg.locator_variant))};
}

ModelHandle build_decoder(const ModelConfig& cfg) {
  return {Role::Decoder, std::make_shared<PatternDecoder>(cfg.decoder_base, cfg.decoder_levels, cfg.pattern_size)};
}

ModelHandle build_extractor(const ModelConfig& cfg) {
  if (cfg.extractor_family == "convnext") {
    return {Role::Extractor,
            std::make_shared<ConvNeXtExtractor>(1, cfg.message_bits, cfg.extractor_depths, cfg.extractor_dims)};
  }
  if (cfg.extractor_family == "resnet") {
    return {Role::Extractor,
            std::make_shared<ResNetExtractor>(1, cfg.message_bits, cfg.extractor_depths, cfg.extractor_dims)};
  }
  throw ConfigError("extractor_family must be convnext or resnet, got '" + cfg.extractor_family + "'");
}

ModelHandle build_role(Role role, const ModelConfig& cfg) {
  switch (role) {
    case Role::Processor: return build_processor(cfg);
    case Role::Encoder: return build_encoder(cfg);
    case Role::Locator: return build_locator(cfg);
    case Role::Decoder: return build_decoder(cfg);
    case Role::Extractor: return build_extractor(cfg);
  }
  throw ConfigError("bad role");
}

ModelHandle& ModelSet::at(Role role) {
  switch (role) {
    case Role::Processor: return processor;
    case Role::Encoder: return encoder;
    case Role::Locator: return locator;
    case Role::Decoder: return decoder;
    case Role::Extractor: return extractor;
  }
  throw ConfigError("bad role");
}

const ModelHandle& ModelSet::at(Role role) const { return const_cast<ModelSet*>(this)->at(role); }

void ModelSet::train(bool on) {
  for (Role r : kAllRoles) {
    auto& h = at(r);
    h.net->train(on && !h.frozen);
  }
}

ModelSet build_models(const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.image_size % (1 << std::max(cfg.encoder_levels, cfg.decoder_levels)) != 0)
    throw ConfigError("image_size must be divisible by 2^levels");
  torch::manual_seed(seed);
  ModelSet s{cfg, build_processor(cfg), build_encoder(cfg), build_locator(cfg), build_decoder(cfg),
             build_extractor(cfg)};
  return s;
}

std::vector<Role> trainable_roles(int stage) {
  switch (stage) {
    case 1: return {Role::Processor, Role::Extractor};
    case 2: return {Role::Encoder, Role::Locator, Role::Decoder};
    case 3: return {kAllRoles.begin(), kAllRoles.end()};
  }
  throw ConfigError("stage must be 1, 2 or 3");
}

void prepare_for_stage(ModelSet& models, int stage) {
  const auto roles = trainable_roles(stage);
  for (Role r : kAllRoles) {
    const bool on = std::find(roles.begin(), roles.end(), r) != roles.end();
    if (on)
      models.at(r).unfreeze();
    else
      models.at(r).freeze();
  }
}

}  // namespace aparecium::models
