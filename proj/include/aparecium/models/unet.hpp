#pragma once

#include <vector>

#include "aparecium/models/layers.hpp"

namespace aparecium::models {

/// Plain U-Net trunk: `levels` max-pool downsamplings, transposed-conv
/// upsampling, skip concatenation. Returns raw logits with `out` channels.
class UNetImpl : public torch::nn::Module {
 public:
  UNetImpl(int in, int out, int base, int levels);
  torch::Tensor forward(const torch::Tensor& x);
  int levels() const { return levels_; }

 private:
  int levels_;
  torch::nn::ModuleList down_{nullptr};
  torch::nn::ModuleList up_{nullptr};
  torch::nn::ModuleList up_conv_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(UNet);

/// Cover ⊕ pattern (4 channels) -> encoded RGB in (0,1). With `cover_skip`
/// the trunk predicts a correction in logit space on top of the cover.
class WatermarkEncoder : public Net {
 public:
  WatermarkEncoder(int base, int levels, bool cover_skip);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  bool cover_skip_;
  UNet trunk_{nullptr};
};

/// RGB crop -> single-channel pattern in (0,1), area-resized to pattern_size.
class PatternDecoder : public Net {
 public:
  PatternDecoder(int base, int levels, int pattern_size);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  int pattern_size_;
  UNet trunk_{nullptr};
};

}  // namespace aparecium::models
