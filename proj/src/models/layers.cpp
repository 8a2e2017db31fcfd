#include "aparecium/models/layers.hpp"

#include <numeric>

namespace aparecium::models {

namespace F = torch::nn::functional;

torch::nn::GroupNorm group_norm(int channels) {
  return torch::nn::GroupNorm(torch::nn::GroupNormOptions(std::gcd(channels, 8), channels));
}

ChannelLayerNormImpl::ChannelLayerNormImpl(int channels)
    : norm_(register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({channels}).eps(1e-6)))) {}

torch::Tensor ChannelLayerNormImpl::forward(const torch::Tensor& x) {
  return norm_(x.permute({0, 2, 3, 1})).permute({0, 3, 1, 2});
}

DoubleConvImpl::DoubleConvImpl(int in, int out) {
  body_ = register_module(
      "body", torch::nn::Sequential(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1)),
                                    group_norm(out), torch::nn::ReLU(),
                                    torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1)),
                                    group_norm(out), torch::nn::ReLU()));
}

torch::Tensor DoubleConvImpl::forward(const torch::Tensor& x) { return body_->forward(x); }

torch::Tensor upsample_like(const torch::Tensor& x, const torch::Tensor& like) {
  if (x.size(2) == like.size(2) && x.size(3) == like.size(3)) return x;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{like.size(2), like.size(3)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

int64_t parameter_count(torch::nn::Module& m) {
  int64_t n = 0;
  for (const auto& p : m.parameters()) n += p.numel();
  return n;
}

}  // namespace aparecium::models
