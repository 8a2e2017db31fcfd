#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "aparecium/core/rng.hpp"
#include "aparecium/models/zoo.hpp"
#include "aparecium/training/config.hpp"
#include "aparecium/training/losses.hpp"

namespace aparecium::train {

/// Per-epoch mean of every logged loss term.
using EpochMeans = std::map<std::string, double>;

struct TrainState {
  int stage = 0;
  int epoch = 0;  // completed epochs
  long step = 0;  // optimizer steps
  long batches = 0;
  std::vector<EpochMeans> loss_history;
  std::string rng_state;

  nlohmann::json to_json() const;
  static TrainState from_json(const nlohmann::json& j);
};

struct StageResult {
  std::filesystem::path checkpoint;
  TrainState state;
};

struct RunOptions {
  /// Continue from the newest epoch checkpoint of the stage if one exists.
  bool resume = false;
  /// Stop after this many epochs in this call (0 = run to cfg epochs).
  int max_epochs = 0;
  /// Epoch checkpoints kept besides `final`.
  int keep_checkpoints = 3;
};

/// Uniform random 0/1 bits, B×n float.
torch::Tensor random_bits(Rng& rng, int batch, int n);

/// One Stage-I forward: processor -> pattern distortions -> extractor -> BCE.
LossBreakdown stage1_loss(const TrainConfig& cfg, models::ModelSet& models, const torch::Tensor& messages,
                          const std::vector<distort::DistortionSpec>& specs, Rng& rng);

/// One Stage-II/III forward: processor -> encoder -> composite on the
/// backgrounds -> pixel distortions -> locator, and the teacher-forced crop
/// -> decoder (-> extractor in stage 3).
LossBreakdown stage23_loss(const TrainConfig& cfg, models::ModelSet& models, int stage, const torch::Tensor& covers,
                           const torch::Tensor& backgrounds, const torch::Tensor& messages,
                           const std::vector<distort::DistortionSpec>& specs, Rng& rng);

/// <run_dir>/stage<N>/final
std::filesystem::path final_checkpoint(const std::filesystem::path& run_dir, int stage);
/// <run_dir>/train_log.jsonl
std::filesystem::path log_path(const std::filesystem::path& run_dir);

/// Stage I: processor + extractor on random messages.
StageResult run_stage1(const TrainConfig& cfg, const std::filesystem::path& run_dir, const RunOptions& opts = {});
/// Stage II: encoder, locator and decoder with the processor and extractor
/// frozen. Raises MissingArtifactError when `stage1_ckpt` does not exist.
StageResult run_stage2(const TrainConfig& cfg, const std::filesystem::path& run_dir,
                       const std::filesystem::path& stage1_ckpt, const RunOptions& opts = {});
/// Stage III: all five networks end to end.
StageResult run_stage3(const TrainConfig& cfg, const std::filesystem::path& run_dir,
                       const std::filesystem::path& stage2_ckpt, const RunOptions& opts = {});

/// Runs the listed stages in order, feeding each the previous final
/// checkpoint (found under run_dir when the previous stage is not listed).
std::vector<StageResult> run_stages(const TrainConfig& cfg, const std::filesystem::path& run_dir,
                                    const std::vector<int>& stages, const RunOptions& opts = {});

/// Reads train_log.jsonl records of type "epoch" for one stage.
std::vector<EpochMeans> read_epoch_log(const std::filesystem::path& run_dir, int stage);

}  // namespace aparecium::train
