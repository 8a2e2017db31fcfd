#pragma once

#include <torch/torch.h>

#include "aparecium/core/rng.hpp"
#include "aparecium/distortion/warp.hpp"

namespace aparecium::distort {

// Pixel-wise distortions on B×C×H×W tensors in [0,1]. Per-sample strengths
// are [B] tensors (or scalars broadcast to the batch). All are
// differentiable with respect to the image; outputs are clamped to [0,1].

/// Rectangle [y0,y0+h)×[x0,x0+w) with the area fraction and aspect (h/w)
/// that were drawn for it.
struct EraseBox {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;
  double area_frac = 0.0;
  double aspect = 1.0;
};

inline constexpr Range kEraseAreaBounds{0.02, 0.33};
inline constexpr Range kEraseAspectBounds{0.3, 3.3};

/// Throws ConfigError when the ranges leave the allowed bounds.
void validate_erase_ranges(Range area, Range aspect);
/// Area fraction and aspect uniform in their ranges; the box always fits.
EraseBox sample_erase_box(int height, int width, Range area, Range aspect, Rng& rng);
torch::Tensor erase(const torch::Tensor& img, const std::vector<EraseBox>& boxes);
torch::Tensor random_erase(const torch::Tensor& img, Range area, Range aspect, Rng& rng);

/// x·(1+δ)
torch::Tensor adjust_brightness(const torch::Tensor& img, const torch::Tensor& delta);
/// (x − mean_gray)·(1+δ) + mean_gray
torch::Tensor adjust_contrast(const torch::Tensor& img, const torch::Tensor& delta);
/// gray + (x − gray)·(1+δ)
torch::Tensor adjust_saturation(const torch::Tensor& img, const torch::Tensor& delta);
/// Rotation of the chroma plane in YIQ by 2π·δ; gray pixels are fixed points.
torch::Tensor adjust_hue(const torch::Tensor& img, const torch::Tensor& delta);

/// Luma (BT.601) of an RGB batch, B×1×H×W.
torch::Tensor rgb_to_gray(const torch::Tensor& img);

struct JitterCaps {
  double brightness = 0.3;
  double contrast = 0.3;
  double saturation = 0.3;
  double hue = 0.1;
};
/// Draws δ uniformly in [−cap, cap] per factor and per sample.
torch::Tensor color_jitter(const torch::Tensor& img, const JitterCaps& caps, Rng& rng);

/// Normalized k×k Gaussian kernel.
torch::Tensor gaussian_kernel2d(int kernel, double sigma, torch::Dtype dtype = torch::kFloat);
/// Line kernel of length k through the center at `angle_deg`, bilinearly
/// splatted and normalized.
torch::Tensor motion_kernel2d(int kernel, double angle_deg, torch::Dtype dtype = torch::kFloat);

/// Depthwise convolution with a per-sample k×k kernel and reflect padding.
torch::Tensor filter2d(const torch::Tensor& img, const std::vector<torch::Tensor>& kernels);

torch::Tensor gaussian_blur(const torch::Tensor& img, int kernel, const std::vector<double>& sigmas);
torch::Tensor gaussian_blur(const torch::Tensor& img, int kernel, Range sigma, Rng& rng);
torch::Tensor motion_blur(const torch::Tensor& img, int kernel, const std::vector<double>& angles_deg);
torch::Tensor motion_blur(const torch::Tensor& img, int kernel, Rng& rng);

/// Additive i.i.d. N(mean, variance) noise. `clamp` is only disabled in
/// moment checks.
torch::Tensor gaussian_noise(const torch::Tensor& img, double variance, Rng& rng, double mean = 0.0,
                             bool clamp = true);

}  // namespace aparecium::distort
