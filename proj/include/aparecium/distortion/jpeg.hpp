#pragma once

#include <array>
#include <vector>

#include <torch/torch.h>

#include "aparecium/core/rng.hpp"
#include "aparecium/distortion/warp.hpp"

namespace aparecium::distort {

/// Differentiable stand-in for rounding: x³ inside (−0.5, 0.5), identity outside.
double quantize_surrogate(double x);
torch::Tensor quantize_surrogate(const torch::Tensor& x);

/// Annex-K base tables (row-major 8×8).
const std::array<int, 64>& luma_base_table();
const std::array<int, 64>& chroma_base_table();
/// libjpeg quality scaling: 5000/q below 50, 200−2q otherwise, entries
/// clamped to [1,255].
std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality);

/// Orthonormal 8×8 DCT-II matrix D (coefficients = D·X·Dᵀ).
torch::Tensor dct_matrix(torch::Dtype dtype = torch::kDouble);

/// RGB→YCbCr (JFIF), 8×8 block DCT, division by the quality-scaled tables,
/// quantize_surrogate, de-quantization, inverse DCT, back to RGB, clamp.
/// Spatial sizes that are not multiples of 8 are reflect-padded and cropped
/// afterwards. `qualities` has one entry per sample (or one for the batch).
torch::Tensor simulated_jpeg(const torch::Tensor& img, const std::vector<double>& qualities);
torch::Tensor simulated_jpeg(const torch::Tensor& img, Range quality, Rng& rng);

/// Quantized DCT coefficients just before quantize_surrogate, shaped
/// B×3×(H/8)×(W/8)×8×8 (after padding). Exposed for gradient checks.
torch::Tensor jpeg_scaled_coefficients(const torch::Tensor& img, const std::vector<double>& qualities);

/// Real baseline JPEG round trip through libjpeg (non-differentiable).
torch::Tensor codec_jpeg(const torch::Tensor& img, int quality);

}  // namespace aparecium::distort
