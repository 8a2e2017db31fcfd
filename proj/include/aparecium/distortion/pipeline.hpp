#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "aparecium/core/rng.hpp"
#include "aparecium/distortion/warp.hpp"

namespace aparecium::distort {

enum class DistortionKind { Spatial, Compose, Pixel };

/// One configurable distortion. Parameter ranges are interpreted per
/// distortion; symmetric quantities (color deltas, rotation, translation)
/// are given as magnitude ranges and receive a random sign when sampled.
struct DistortionSpec {
  std::string name;
  std::map<std::string, Range> params;
  double probability = 0.5;

  Range param(const std::string& key) const;
  DistortionKind kind() const;
  bool operator==(const DistortionSpec&) const = default;
};

enum class PipelineStage { I, II, Eval, Combined };

std::string to_string(PipelineStage stage);
PipelineStage stage_from_string(const std::string& s);

/// Names accepted by the registry, in a stable order.
const std::vector<std::string>& distortion_names();
/// Defaults that a spec starts from (paper ranges for training).
DistortionSpec default_spec(const std::string& name);

/// Throws ConfigError for unknown names, missing parameters, probabilities
/// outside [0,1] or (when `training_bounds`) ranges beyond the allowed caps.
void validate_spec(const DistortionSpec& spec, bool training_bounds);

struct PipelineOverrides {
  /// name -> param -> range
  std::map<std::string, std::map<std::string, Range>> params;
  std::optional<double> probability;
  /// Eval stage only.
  std::string eval_distortion;
  double eval_strength = 0.0;
};

/// Stage I: random_erase, perspective, affine(scale [1,2]) on patterns.
/// Stage II: perspective, affine(scale [0.15,1]), compose, then eight
/// pixel-wise distortions. Eval: one distortion at a fixed strength with
/// probability 1. Combined: perspective, translation and the eight pixel
/// distortions at training strengths.
std::vector<DistortionSpec> build_pipeline(PipelineStage stage, const PipelineOverrides& overrides = {});

/// A single distortion at a fixed strength, always applied. Strength means
/// the color delta magnitude, noise sigma, JPEG quality, blur kernel size
/// (sigma 100), motion kernel size, perspective scale or translation fraction.
DistortionSpec eval_spec(const std::string& name, double strength);
/// Strength value that leaves the input untouched, when one exists.
std::optional<double> identity_strength(const std::string& name);

std::vector<DistortionSpec> filter_kind(const std::vector<DistortionSpec>& specs, DistortionKind kind);

/// Concrete draw for one sample.
struct SampledDistortion {
  std::string name;
  bool fired = false;
  std::map<std::string, double> values;
  std::uint64_t seed = 0;
  /// Spatial ops: forward map in frame coordinates.
  cv::Matx33d forward = cv::Matx33d::eye();
};
using DistortionDraw = std::vector<SampledDistortion>;

/// Coin flips and parameters for every spec, in order. `geo` describes the
/// image placement for spatial distortions.
DistortionDraw sample_draw(const std::vector<DistortionSpec>& specs, const WarpGeometry& geo, Rng& rng);

/// Product of the fired spatial forward maps (in order) with the placement.
WarpTransform spatial_warp(const DistortionDraw& draw, const WarpGeometry& geo);

/// Applies a draw to a 1×C×H×W tensor in place-geometry (spatial ops warp
/// within the frame). Consecutive warps are merged into one resampling.
torch::Tensor apply_draw(const torch::Tensor& img, const DistortionDraw& draw);

/// Samples and applies the specs independently for each batch entry.
torch::Tensor apply_pipeline(const torch::Tensor& batch, const std::vector<DistortionSpec>& specs, Rng& rng,
                             std::vector<DistortionDraw>* draws = nullptr);

/// Key-value (YAML) round trip of a pipeline definition.
void save_pipeline(const std::vector<DistortionSpec>& specs, const std::filesystem::path& path);
std::vector<DistortionSpec> load_pipeline(const std::filesystem::path& path);

}  // namespace aparecium::distort
