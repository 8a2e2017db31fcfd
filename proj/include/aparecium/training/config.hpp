#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "aparecium/core/kv.hpp"
#include "aparecium/distortion/compose.hpp"
#include "aparecium/distortion/pipeline.hpp"
#include "aparecium/models/zoo.hpp"

namespace aparecium::train {

struct StageConfig {
  int stage = 1;
  int epochs = 20;
  int batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 1e-2;
  /// (visual, mask, pattern, message)
  std::array<double, 4> lambdas{1.0, 1.0, 1.0, 1.0};
  int accumulate_every = 1;
  std::uint64_t seed = 0;
  std::filesystem::path dataset_root;
  /// Stage I: batches per epoch drawn from the message stream.
  int steps_per_epoch = 500;
  /// Stages II/III: passes over the image folder per epoch.
  int repeats = 1;
  /// Batches over which distortion probabilities ramp linearly from 0 to
  /// their configured values (0 = full strength from the start).
  int warmup = 0;

  /// Full-scale hyper-parameters for stage 1, 2 or 3.
  static StageConfig defaults(int stage);
  int effective_batch() const { return batch_size * accumulate_every; }
};

struct TrainConfig {
  std::string profile = "paper";
  std::uint64_t seed = 0;
  models::ModelConfig model;
  std::array<StageConfig, 3> stages{StageConfig::defaults(1), StageConfig::defaults(2), StageConfig::defaults(3)};

  std::filesystem::path dataset_root;
  /// Optional text files listing image paths relative to dataset_root.
  std::filesystem::path train_list;
  std::filesystem::path val_list;
  /// Held-out covers used for per-epoch PSNR/BER logging.
  std::filesystem::path val_root;
  int val_images = 20;
  bool cache_images = true;

  int canvas_size = 448;
  double min_footprint = 0.01;
  bool fill_canvas = true;

  bool distortions_enabled = true;
  distort::PipelineOverrides distortions;

  /// Stage I trains on one fixed batch (overfit probe).
  bool overfit = false;
  int eval_messages = 256;
  int log_every = 10;

  static TrainConfig paper();
  static TrainConfig desk();
  static TrainConfig for_profile(const std::string& name);

  StageConfig& stage(int s) { return stages.at(static_cast<std::size_t>(s - 1)); }
  const StageConfig& stage(int s) const { return stages.at(static_cast<std::size_t>(s - 1)); }

  distort::CompositeOptions composite_options() const;
  std::vector<distort::DistortionSpec> pipeline(distort::PipelineStage stage) const;

  /// Sets one dotted key. Unknown keys and unreadable values raise ConfigError.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& kv);
  KeyValues to_kv() const;
  /// Range and consistency checks.
  void validate() const;
};

}  // namespace aparecium::train
