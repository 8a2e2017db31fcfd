#pragma once

#include <vector>

#include <torch/torch.h>

#include "aparecium/core/rng.hpp"
#include "aparecium/distortion/pipeline.hpp"
#include "aparecium/distortion/warp.hpp"
#include "aparecium/training/crop.hpp"

namespace aparecium::distort {

struct CompositeOptions {
  int canvas_size = 448;
  int mask_size = 320;
  int pattern_size = 256;
  /// Warps whose footprint covers less than this fraction of the canvas are redrawn.
  double min_footprint = 0.01;
  /// Magnify the encoded image to fill the canvas before the spatial
  /// distortions, so that affine scale 1 means a full-frame watermark.
  /// Otherwise it is pasted at native size in the center.
  bool fill_canvas = true;
};

/// Batch of composites. `warps[b]` maps canvas pixels to encoded-image pixels.
struct CompositeBatch {
  torch::Tensor composite;   // B×3×canvas×canvas
  torch::Tensor gt_mask;     // B×1×mask×mask, values in {0,1}
  torch::Tensor gt_pattern;  // B×1×pattern×pattern (undefined when no pattern was given)
  torch::Tensor footprint;   // B×1×canvas×canvas, binary, before downscaling
  std::vector<WarpTransform> warps;
  std::vector<CropBox> boxes;  // gt crop boxes in canvas coordinates
};

/// Pastes each encoded image onto its background through `warps`
/// (canvas -> image). The footprint is the warped all-ones image; the
/// composite is warped + (1 − coverage)·background. `patterns` may be an
/// undefined tensor.
CompositeBatch compose_with_warps(const torch::Tensor& encoded, const torch::Tensor& background,
                                  const torch::Tensor& patterns, const std::vector<WarpTransform>& warps,
                                  const CompositeOptions& opts);

/// Draws the spatial specs per sample (perspective, then affine) on the
/// placement chosen by `opts.fill_canvas`, redrawing collapsed footprints.
CompositeBatch compose_onto_background(const torch::Tensor& encoded, const torch::Tensor& background,
                                       const torch::Tensor& patterns, const std::vector<DistortionSpec>& spatial,
                                       Rng& rng, const CompositeOptions& opts);

}  // namespace aparecium::distort
