#include "aparecium/models/extractor.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium::models {

namespace nn = torch::nn;

ConvNeXtBlockImpl::ConvNeXtBlockImpl(int dim) {
  dwconv_ = register_module("dwconv", nn::Conv2d(nn::Conv2dOptions(dim, dim, 7).padding(3).groups(dim)));
  norm_ = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({dim}).eps(1e-6)));
  pw1_ = register_module("pw1", nn::Linear(dim, 4 * dim));
  pw2_ = register_module("pw2", nn::Linear(4 * dim, dim));
  gamma_ = register_parameter("gamma", torch::full({dim}, 1e-6));
}

torch::Tensor ConvNeXtBlockImpl::forward(const torch::Tensor& x) {
  auto h = dwconv_(x).permute({0, 2, 3, 1});
  h = pw2_(torch::gelu(pw1_(norm_(h))));
  return x + (gamma_ * h).permute({0, 3, 1, 2});
}

ConvNeXtExtractor::ConvNeXtExtractor(int in_channels, int message_bits, std::vector<int> depths,
                                     std::vector<int> dims) {
  if (depths.empty() || depths.size() != dims.size()) throw ConfigError("ConvNeXt depths and dims must pair up");
  downsample_ = register_module("downsample", nn::ModuleList());
  stages_ = register_module("stages", nn::ModuleList());
  downsample_->push_back(
      nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, dims[0], 4).stride(4)), ChannelLayerNorm(dims[0])));
  for (std::size_t i = 1; i < dims.size(); ++i) {
    downsample_->push_back(
        nn::Sequential(ChannelLayerNorm(dims[i - 1]), nn::Conv2d(nn::Conv2dOptions(dims[i - 1], dims[i], 2).stride(2))));
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    nn::Sequential stage;
    for (int d = 0; d < depths[i]; ++d) stage->push_back(ConvNeXtBlock(dims[i]));
    stages_->push_back(stage);
  }
  head_norm_ = register_module("head_norm", nn::LayerNorm(nn::LayerNormOptions({dims.back()}).eps(1e-6)));
  head_ = register_module("head", nn::Linear(dims.back(), message_bits));
  torch::NoGradGuard no_grad;
  for (auto& m : modules(false)) {
    if (auto* conv = m->as<nn::Conv2dImpl>()) {
      conv->weight.normal_(0.0, 0.02).clamp_(-0.04, 0.04);
      nn::init::zeros_(conv->bias);
    } else if (auto* lin = m->as<nn::LinearImpl>()) {
      lin->weight.normal_(0.0, 0.02).clamp_(-0.04, 0.04);
      nn::init::zeros_(lin->bias);
    }
  }
}

torch::Tensor ConvNeXtExtractor::forward(const torch::Tensor& x) {
  if (x.dim() != 4) throw InputError("extractor expects B×C×H×W");
  auto h = x;
  for (std::size_t i = 0; i < stages_->size(); ++i) {
    h = downsample_[i]->as<nn::SequentialImpl>()->forward(h);
    h = stages_[i]->as<nn::SequentialImpl>()->forward(h);
  }
  return head_(head_norm_(h.mean({2, 3})));
}

BottleneckImpl::BottleneckImpl(int in, int width, int stride) {
  const int out = width * 4;
  body_ = register_module(
      "body", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, width, 1).bias(false)), nn::BatchNorm2d(width),
                             nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(width, width, 3).stride(stride).padding(1).bias(false)),
                             nn::BatchNorm2d(width), nn::ReLU(),
                             nn::Conv2d(nn::Conv2dOptions(width, out, 1).bias(false)), nn::BatchNorm2d(out)));
  if (stride != 1 || in != out) {
    shortcut_ = register_module("shortcut",
                                nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)),
                                               nn::BatchNorm2d(out)));
  }
}

torch::Tensor BottleneckImpl::forward(const torch::Tensor& x) {
  auto identity = shortcut_ ? shortcut_->forward(x) : x;
  return torch::relu(body_->forward(x) + identity);
}

ResNetExtractor::ResNetExtractor(int in_channels, int message_bits, std::vector<int> depths,
                                 std::vector<int> widths) {
  if (depths.empty() || depths.size() != widths.size()) throw ConfigError("ResNet depths and widths must pair up");
  stem_ = register_module(
      "stem", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in_channels, widths[0], 7).stride(2).padding(3).bias(false)),
                             nn::BatchNorm2d(widths[0]), nn::ReLU(),
                             nn::MaxPool2d(nn::MaxPool2dOptions(3).stride(2).padding(1))));
  nn::Sequential stages;
  int in = widths[0];
  for (std::size_t i = 0; i < depths.size(); ++i) {
    for (int d = 0; d < depths[i]; ++d) {
      const int stride = (d == 0 && i > 0) ? 2 : 1;
      stages->push_back(Bottleneck(in, widths[i], stride));
      in = widths[i] * 4;
    }
  }
  stages_ = register_module("stages", stages);
  head_ = register_module("head", nn::Linear(in, message_bits));
}

torch::Tensor ResNetExtractor::forward(const torch::Tensor& x) {
  if (x.dim() != 4) throw InputError("extractor expects B×C×H×W");
  return head_(stages_->forward(stem_->forward(x)).mean({2, 3}));
}

}  // namespace aparecium::models
