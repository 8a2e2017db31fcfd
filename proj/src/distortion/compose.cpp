#include "aparecium/distortion/compose.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium::distort {

namespace {

struct Footprint {
  torch::Tensor coverage;  // soft, B×1×C×C
  torch::Tensor binary;    // B×1×C×C
  torch::Tensor mask;      // B×1×M×M
};

Footprint footprint_of(int64_t batch, int image_h, int image_w, const std::vector<WarpTransform>& warps,
                       const CompositeOptions& opts) {
  auto ones = torch::ones({batch, 1, image_h, image_w});
  Footprint f;
  f.coverage = warp_image(ones, warps, opts.canvas_size, opts.canvas_size);
  f.binary = (f.coverage > 0.5).to(torch::kFloat);
  f.mask = (resize_area(f.binary, opts.mask_size, opts.mask_size) > 0.5).to(torch::kFloat);
  return f;
}

}  // namespace

CompositeBatch compose_with_warps(const torch::Tensor& encoded, const torch::Tensor& background,
                                  const torch::Tensor& patterns, const std::vector<WarpTransform>& warps,
                                  const CompositeOptions& opts) {
  if (encoded.dim() != 4 || encoded.size(1) != 3) throw InputError("encoded batch must be B×3×H×W");
  const auto batch = encoded.size(0);
  if (background.dim() != 4 || background.size(0) != batch || background.size(2) != opts.canvas_size ||
      background.size(3) != opts.canvas_size) {
    throw InputError("background batch must be B×3×canvas×canvas");
  }
  if (static_cast<int64_t>(warps.size()) != batch) throw InputError("one warp per sample required");
  const int h = static_cast<int>(encoded.size(2));
  const int w = static_cast<int>(encoded.size(3));

  CompositeBatch out;
  out.warps = warps;
  auto fp = footprint_of(batch, h, w, warps, opts);
  auto warped = warp_image(encoded, warps, opts.canvas_size, opts.canvas_size);
  auto coverage = fp.coverage.to(encoded.scalar_type());
  out.composite = warped + (1.0 - coverage) * background.to(encoded.scalar_type());
  out.footprint = fp.binary;
  out.gt_mask = fp.mask;

  for (int64_t b = 0; b < batch; ++b) {
    auto box = largest_component_box(fp.mask[b]);
    if (!box) throw NotLocatedError("composite footprint vanished after downscaling");
    out.boxes.push_back(map_box(*box, opts.mask_size, opts.mask_size, opts.canvas_size, opts.canvas_size));
  }
  if (patterns.defined()) {
    auto up = resize_bilinear(patterns, h, w);
    auto warped_pattern = warp_image(up, warps, opts.canvas_size, opts.canvas_size);
    out.gt_pattern = crop_and_resize(warped_pattern, out.boxes, opts.pattern_size);
  }
  return out;
}

CompositeBatch compose_onto_background(const torch::Tensor& encoded, const torch::Tensor& background,
                                       const torch::Tensor& patterns, const std::vector<DistortionSpec>& spatial,
                                       Rng& rng, const CompositeOptions& opts) {
  for (const auto& s : spatial) {
    if (s.kind() != DistortionKind::Spatial) throw ConfigError("'" + s.name + "' is not a spatial distortion");
  }
  const int h = static_cast<int>(encoded.size(2));
  const int w = static_cast<int>(encoded.size(3));
  const auto geo = opts.fill_canvas ? WarpGeometry::fitted(w, h, opts.canvas_size, opts.canvas_size)
                                    : WarpGeometry::centered(w, h, opts.canvas_size, opts.canvas_size);
  const double canvas_area = static_cast<double>(opts.canvas_size) * opts.canvas_size;
  std::vector<WarpTransform> warps;
  for (int64_t b = 0; b < encoded.size(0); ++b) {
    for (int attempt = 0;; ++attempt) {
      auto warp = spatial_warp(sample_draw(spatial, geo, rng), geo);
      auto fp = footprint_of(1, h, w, {warp}, opts);
      const double frac = fp.binary.sum().item<double>() / canvas_area;
      if ((frac >= opts.min_footprint && fp.mask.sum().item<double>() > 0) || attempt >= 100) {
        warps.push_back(warp);
        break;
      }
    }
  }
  return compose_with_warps(encoded, background, patterns, warps, opts);
}

}  // namespace aparecium::distort
