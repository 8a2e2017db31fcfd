#pragma once

#include <torch/torch.h>

namespace aparecium {

inline constexpr int kPatternSize = 256;
inline constexpr int kMaskSize = 320;

/// C×H×W float image with intensities in [0,1]; C is 1 or 3.
/// Construction clamps to the unit interval so every module boundary sees
/// valid pixels.
class ImageTensor {
 public:
  ImageTensor() = default;
  explicit ImageTensor(torch::Tensor chw);

  static ImageTensor zeros(int channels, int height, int width);
  static ImageTensor filled(int channels, int height, int width, float value);

  const torch::Tensor& tensor() const { return data_; }
  int channels() const { return static_cast<int>(data_.size(0)); }
  int height() const { return static_cast<int>(data_.size(1)); }
  int width() const { return static_cast<int>(data_.size(2)); }
  bool empty() const { return !data_.defined(); }

  /// 1×C×H×W view for network input.
  torch::Tensor batched() const { return data_.unsqueeze(0); }
  /// Gray images are replicated; RGB images are returned unchanged.
  ImageTensor to_rgb() const;
  ImageTensor clone() const { return ImageTensor(data_.clone()); }

 private:
  torch::Tensor data_;
};

/// Single-channel square pattern (side 256 at full scale).
class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(torch::Tensor chw);
  const torch::Tensor& tensor() const { return data_; }
  int size() const { return static_cast<int>(data_.size(1)); }

 private:
  torch::Tensor data_;
};

/// Single-channel square localization mask (side 320 at full scale).
class LocMask {
 public:
  LocMask() = default;
  explicit LocMask(torch::Tensor chw);
  const torch::Tensor& tensor() const { return data_; }
  int size() const { return static_cast<int>(data_.size(1)); }
  /// Fraction of pixels strictly above 0.5.
  double foreground_fraction() const;

 private:
  torch::Tensor data_;
};

/// Bilinear resize of a C×H×W or B×C×H×W tensor.
torch::Tensor resize_bilinear(const torch::Tensor& img, int height, int width);
/// Area-averaging resize, used for downscaling masks.
torch::Tensor resize_area(const torch::Tensor& img, int height, int width);

}  // namespace aparecium
