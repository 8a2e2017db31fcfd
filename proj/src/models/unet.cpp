#include "aparecium/models/unet.hpp"

#include "aparecium/core/errors.hpp"
#include "aparecium/core/image.hpp"

namespace aparecium::models {

namespace F = torch::nn::functional;

UNetImpl::UNetImpl(int in, int out, int base, int levels) : levels_(levels) {
  if (levels < 1 || base < 1) throw ConfigError("U-Net needs at least one level and a positive width");
  down_ = register_module("down", torch::nn::ModuleList());
  up_ = register_module("up", torch::nn::ModuleList());
  up_conv_ = register_module("up_conv", torch::nn::ModuleList());
  down_->push_back(DoubleConv(in, base));
  for (int i = 1; i <= levels; ++i) down_->push_back(DoubleConv(base << (i - 1), base << i));
  for (int i = levels; i >= 1; --i) {
    up_->push_back(
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(base << i, base << (i - 1), 2).stride(2)));
    up_conv_->push_back(DoubleConv(base << i, base << (i - 1)));
  }
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(base, out, 1)));
}

torch::Tensor UNetImpl::forward(const torch::Tensor& x) {
  const int64_t stride = int64_t{1} << levels_;
  if (x.size(2) % stride != 0 || x.size(3) % stride != 0) {
    throw InputError("U-Net input side must be a multiple of " + std::to_string(stride));
  }
  std::vector<torch::Tensor> skips;
  auto h = down_[0]->as<DoubleConvImpl>()->forward(x);
  for (int i = 1; i <= levels_; ++i) {
    skips.push_back(h);
    h = down_[static_cast<std::size_t>(i)]->as<DoubleConvImpl>()->forward(F::max_pool2d(h, F::MaxPool2dFuncOptions(2)));
  }
  for (int i = 0; i < levels_; ++i) {
    h = up_[static_cast<std::size_t>(i)]->as<torch::nn::ConvTranspose2dImpl>()->forward(h);
    h = torch::cat({skips[static_cast<std::size_t>(levels_ - 1 - i)], h}, 1);
    h = up_conv_[static_cast<std::size_t>(i)]->as<DoubleConvImpl>()->forward(h);
  }
  return head_(h);
}

WatermarkEncoder::WatermarkEncoder(int base, int levels, bool cover_skip)
    : cover_skip_(cover_skip), trunk_(register_module("trunk", UNet(4, 3, base, levels))) {}

torch::Tensor WatermarkEncoder::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 4) throw InputError("encoder expects B×4×H×W (cover RGB + pattern)");
  auto logits = trunk_(x);
  if (cover_skip_) {
    auto cover = x.narrow(1, 0, 3).clamp(1e-3, 1.0 - 1e-3);
    logits = logits + torch::log(cover / (1.0 - cover));
  }
  return torch::sigmoid(logits);
}

PatternDecoder::PatternDecoder(int base, int levels, int pattern_size)
    : pattern_size_(pattern_size), trunk_(register_module("trunk", UNet(3, 1, base, levels))) {}

torch::Tensor PatternDecoder::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw InputError("decoder expects B×3×H×W");
  return resize_area(torch::sigmoid(trunk_(x)), pattern_size_, pattern_size_);
}

}  // namespace aparecium::models
