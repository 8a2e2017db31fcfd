#pragma once

#include <vector>

#include "aparecium/models/layers.hpp"

namespace aparecium::models {

class ConvNeXtBlockImpl : public torch::nn::Module {
 public:
  explicit ConvNeXtBlockImpl(int dim);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d dwconv_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
  torch::nn::Linear pw1_{nullptr};
  torch::nn::Linear pw2_{nullptr};
  torch::Tensor gamma_;
};
TORCH_MODULE(ConvNeXtBlock);

/// ConvNeXt classifier: patchify stem, stages of depthwise 7×7 blocks,
/// global pooling, LayerNorm and a linear head producing one score per bit.
class ConvNeXtExtractor : public Net {
 public:
  ConvNeXtExtractor(int in_channels, int message_bits, std::vector<int> depths, std::vector<int> dims);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  torch::nn::ModuleList downsample_{nullptr};
  torch::nn::ModuleList stages_{nullptr};
  torch::nn::LayerNorm head_norm_{nullptr};
  torch::nn::Linear head_{nullptr};
};

class BottleneckImpl : public torch::nn::Module {
 public:
  BottleneckImpl(int in, int width, int stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  torch::nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(Bottleneck);

/// Residual bottleneck classifier (ResNet-50 layout with depths {3,4,6,3},
/// widths {64,128,256,512}).
class ResNetExtractor : public Net {
 public:
  ResNetExtractor(int in_channels, int message_bits, std::vector<int> depths, std::vector<int> widths);
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  torch::nn::Sequential stem_{nullptr};
  torch::nn::Sequential stages_{nullptr};
  torch::nn::Linear head_{nullptr};
};

}  // namespace aparecium::models
