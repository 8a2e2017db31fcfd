#pragma once

#include <torch/torch.h>

namespace aparecium::models {

/// Single-input, single-output network; every role implements this.
class Net : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& x) = 0;
};

/// GroupNorm with up to 8 groups that evenly divide `channels`.
torch::nn::GroupNorm group_norm(int channels);

/// LayerNorm over the channel axis of an NCHW tensor.
class ChannelLayerNormImpl : public torch::nn::Module {
 public:
  explicit ChannelLayerNormImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(ChannelLayerNorm);

/// conv3×3 -> GroupNorm -> ReLU, twice.
class DoubleConvImpl : public torch::nn::Module {
 public:
  DoubleConvImpl(int in, int out);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(DoubleConv);

/// Bilinear resize of `x` to the spatial size of `like`.
torch::Tensor upsample_like(const torch::Tensor& x, const torch::Tensor& like);

/// Number of scalar parameters.
int64_t parameter_count(torch::nn::Module& m);

}  // namespace aparecium::models
