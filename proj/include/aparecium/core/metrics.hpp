#pragma once

#include <limits>

#include <torch/torch.h>

#include "aparecium/core/image.hpp"
#include "aparecium/core/message.hpp"

namespace aparecium {

/// Returned by psnr() when the two images are identical.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// Peak value 1.0. Returns kPsnrInfinity when MSE is exactly zero.
double psnr(const ImageTensor& a, const ImageTensor& b);

/// Mean local SSIM, 11×11 Gaussian window with sigma 1.5, C1=(0.01)^2,
/// C2=(0.03)^2, valid windows only, averaged over channels.
double ssim(const ImageTensor& a, const ImageTensor& b);

/// Fraction of differing bits.
double ber(const Message& truth, const Message& got);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

/// Differentiable SSIM over B×C×H×W tensors; returns the per-sample mean
/// as a [B] tensor. Throws InputError when H or W is smaller than the window.
torch::Tensor ssim_per_sample(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& opts = {});

/// Normalized 1-D Gaussian taps.
torch::Tensor gaussian_taps(int size, double sigma, torch::Dtype dtype = torch::kDouble);

}  // namespace aparecium
