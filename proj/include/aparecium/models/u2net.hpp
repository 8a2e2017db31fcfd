#pragma once

#include <string>
#include <vector>

#include "aparecium/models/layers.hpp"

namespace aparecium::models {

/// conv3×3 (dilated) -> BatchNorm -> ReLU.
class ReBnConvImpl : public torch::nn::Module {
 public:
  ReBnConvImpl(int in, int out, int dilation);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(ReBnConv);

/// Residual U-block. `height` counts the encoder convolutions; the dilated
/// ("F") form replaces pooling with growing dilation.
class RsuBlockImpl : public torch::nn::Module {
 public:
  RsuBlockImpl(int height, int in, int mid, int out, bool dilated);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  int height_;
  bool dilated_;
  ReBnConv conv_in_{nullptr};
  torch::nn::ModuleList enc_{nullptr};
  torch::nn::ModuleList dec_{nullptr};
};
TORCH_MODULE(RsuBlock);

struct RsuSpec {
  int height;
  int in;
  int mid;
  int out;
  bool dilated;
};

/// Encoder stages (top to bottom) and decoder stages (bottom to top, one
/// fewer than the encoder).
struct U2NetLayout {
  std::vector<RsuSpec> encoder;
  std::vector<RsuSpec> decoder;

  /// "full" (~44M parameters), "light" (~1.1M) or "tiny" (desk-scale).
  static U2NetLayout named(const std::string& variant);
};

/// Nested-U salient-region network. Side outputs of every decoder stage and
/// the deepest encoder stage are fused by a 1×1 conv; the result passes
/// through a sigmoid.
class U2Net : public Net {
 public:
  explicit U2Net(const U2NetLayout& layout);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  U2NetLayout layout_;
  torch::nn::ModuleList enc_{nullptr};
  torch::nn::ModuleList dec_{nullptr};
  torch::nn::ModuleList side_{nullptr};
  torch::nn::Conv2d fuse_{nullptr};
};

}  // namespace aparecium::models
