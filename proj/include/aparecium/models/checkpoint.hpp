#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "aparecium/models/zoo.hpp"

namespace aparecium::models {

struct CheckpointManifest {
  int stage = 0;
  std::uint64_t seed = 0;
  ModelConfig config;
  /// Free-form state stored alongside (train state, rng state, profile).
  nlohmann::json extra = nlohmann::json::object();
};

/// Writes `<role>.pt` for every network, `manifest.json`, and `optimizer.pt`
/// when an optimizer is given.
void save_checkpoint(const ModelSet& models, const CheckpointManifest& manifest, const std::filesystem::path& dir,
                     torch::optim::Optimizer* optimizer = nullptr);

CheckpointManifest read_manifest(const std::filesystem::path& dir);

struct LoadedCheckpoint {
  ModelSet models;
  CheckpointManifest manifest;
};

/// Rebuilds the networks from the stored config and loads their weights.
/// With `expected`, a config hash mismatch raises IncompatibleCheckpointError.
/// A missing directory/manifest raises MissingArtifactError; a missing role
/// file raises MissingArtifactError naming the role.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir, const ModelConfig* expected = nullptr);

/// Returns false when the checkpoint carries no optimizer state.
bool load_optimizer(const std::filesystem::path& dir, torch::optim::Optimizer& optimizer);

}  // namespace aparecium::models
