#pragma once

#include <optional>

#include <torch/torch.h>

#include "aparecium/core/image.hpp"

namespace aparecium {

/// Half-open box [x0,x1)×[y0,y1) in pixel coordinates of some image.
struct CropBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool operator==(const CropBox&) const = default;
};

double box_iou(const CropBox& a, const CropBox& b);

/// Bounding box (mask coordinates) of the largest 8-connected component of
/// `mask > 0.5`; nullopt when no pixel is above threshold. `mask` is 1×H×W
/// or H×W.
std::optional<CropBox> largest_component_box(const torch::Tensor& mask);

/// Scales a box found on a mask grid to an image of another size, rounding
/// outward.
CropBox map_box(const CropBox& box, int from_w, int from_h, int to_w, int to_h);

/// Crops B×C×H×W to the per-sample boxes and bilinearly resizes each crop to
/// out_size². Box coordinates are indices; gradients flow through pixels.
torch::Tensor crop_and_resize(const torch::Tensor& images, const std::vector<CropBox>& boxes, int out_size);

struct CropResult {
  ImageTensor crop;
  CropBox box;  // in composite coordinates
};

/// Thresholds the mask at 0.5, boxes its largest component, maps the box to
/// composite resolution and resamples the crop to out_size². Throws
/// NotLocatedError on an empty mask.
CropResult crop_by_mask(const ImageTensor& composite, const LocMask& mask, int out_size = kPatternSize);

/// Batched form used in training; returns crops and boxes.
std::pair<torch::Tensor, std::vector<CropBox>> crop_by_masks(const torch::Tensor& composites,
                                                             const torch::Tensor& masks, int out_size);

}  // namespace aparecium
