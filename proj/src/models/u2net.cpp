#include "aparecium/models/u2net.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium::models {

namespace F = torch::nn::functional;

namespace {

torch::Tensor pool(const torch::Tensor& x) {
  return F::max_pool2d(x, F::MaxPool2dFuncOptions(2).stride(2).ceil_mode(true));
}

}  // namespace

ReBnConvImpl::ReBnConvImpl(int in, int out, int dilation)
    : conv_(register_module(
          "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(dilation).dilation(dilation).bias(false)))),
      bn_(register_module("bn", torch::nn::BatchNorm2d(out))) {}

torch::Tensor ReBnConvImpl::forward(const torch::Tensor& x) { return torch::relu(bn_(conv_(x))); }

RsuBlockImpl::RsuBlockImpl(int height, int in, int mid, int out, bool dilated)
    : height_(height), dilated_(dilated) {
  if (height < 2) throw ConfigError("RSU height must be at least 2");
  conv_in_ = register_module("conv_in", ReBnConv(in, out, 1));
  enc_ = register_module("enc", torch::nn::ModuleList());
  dec_ = register_module("dec", torch::nn::ModuleList());
  // Encoder convs 1..height-1, then the bottom conv at dilation 2 (or 2^(h-1)).
  for (int i = 0; i < height; ++i) {
    const int d = dilated ? (1 << i) : (i == height - 1 ? 2 : 1);
    enc_->push_back(ReBnConv(i == 0 ? out : mid, mid, d));
  }
  // Decoder convs from the bottom up; the last one maps back to `out`.
  for (int i = height - 2; i >= 0; --i) {
    const int d = dilated ? (1 << i) : 1;
    dec_->push_back(ReBnConv(2 * mid, i == 0 ? out : mid, d));
  }
}

torch::Tensor RsuBlockImpl::forward(const torch::Tensor& x) {
  auto hin = conv_in_(x);
  std::vector<torch::Tensor> feats;
  auto h = hin;
  for (int i = 0; i < height_; ++i) {
    if (i > 0 && i < height_ - 1 && !dilated_) h = pool(h);
    h = enc_[static_cast<std::size_t>(i)]->as<ReBnConvImpl>()->forward(h);
    feats.push_back(h);
  }
  // feats[height-1] is the bottom; walk back up.
  auto d = feats.back();
  for (int i = height_ - 2, k = 0; i >= 0; --i, ++k) {
    auto skip = feats[static_cast<std::size_t>(i)];
    d = dec_[static_cast<std::size_t>(k)]->as<ReBnConvImpl>()->forward(torch::cat({upsample_like(d, skip), skip}, 1));
  }
  return d + hin;
}

U2NetLayout U2NetLayout::named(const std::string& variant) {
  if (variant == "full") {
    return {{{7, 3, 32, 64, false},
             {6, 64, 32, 128, false},
             {5, 128, 64, 256, false},
             {4, 256, 128, 512, false},
             {4, 512, 256, 512, true},
             {4, 512, 256, 512, true}},
            {{4, 1024, 256, 512, true},
             {4, 1024, 128, 256, false},
             {5, 512, 64, 128, false},
             {6, 256, 32, 64, false},
             {7, 128, 16, 64, false}}};
  }
  if (variant == "light") {
    return {{{7, 3, 16, 64, false},
             {6, 64, 16, 64, false},
             {5, 64, 16, 64, false},
             {4, 64, 16, 64, false},
             {4, 64, 16, 64, true},
             {4, 64, 16, 64, true}},
            {{4, 128, 16, 64, true},
             {4, 128, 16, 64, false},
             {5, 128, 16, 64, false},
             {6, 128, 16, 64, false},
             {7, 128, 16, 64, false}}};
  }
  if (variant == "tiny") {
    return {{{5, 3, 12, 24, false}, {4, 24, 12, 24, false}, {4, 24, 12, 24, true}},
            {{4, 48, 12, 24, false}, {5, 48, 12, 24, false}}};
  }
  throw ConfigError("unknown locator variant '" + variant + "' (full, light, tiny)");
}

U2Net::U2Net(const U2NetLayout& layout) : layout_(layout) {
  if (layout.encoder.size() < 2 || layout.decoder.size() + 1 != layout.encoder.size()) {
    throw ConfigError("nested-U layout needs n encoder stages and n-1 decoder stages");
  }
  enc_ = register_module("enc", torch::nn::ModuleList());
  dec_ = register_module("dec", torch::nn::ModuleList());
  side_ = register_module("side", torch::nn::ModuleList());
  for (const auto& s : layout.encoder) enc_->push_back(RsuBlock(s.height, s.in, s.mid, s.out, s.dilated));
  for (const auto& s : layout.decoder) dec_->push_back(RsuBlock(s.height, s.in, s.mid, s.out, s.dilated));
  // Side heads: decoder outputs top-first, then the deepest encoder stage.
  for (auto it = layout.decoder.rbegin(); it != layout.decoder.rend(); ++it) {
    side_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(it->out, 1, 3).padding(1)));
  }
  side_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(layout.encoder.back().out, 1, 3).padding(1)));
  const auto n_sides = static_cast<int>(side_->size());
  fuse_ = register_module("fuse", torch::nn::Conv2d(torch::nn::Conv2dOptions(n_sides, 1, 1)));
}

torch::Tensor U2Net::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != layout_.encoder.front().in) throw InputError("locator expects B×3×H×W");
  const auto n = layout_.encoder.size();
  std::vector<torch::Tensor> enc_out;
  auto h = x;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) h = pool(h);
    h = enc_[i]->as<RsuBlockImpl>()->forward(h);
    enc_out.push_back(h);
  }
  std::vector<torch::Tensor> dec_out;  // bottom-up
  auto d = enc_out.back();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& skip = enc_out[n - 2 - k];
    d = dec_[k]->as<RsuBlockImpl>()->forward(torch::cat({upsample_like(d, skip), skip}, 1));
    dec_out.push_back(d);
  }
  std::vector<torch::Tensor> sides;
  for (std::size_t k = 0; k < dec_out.size(); ++k) {
    const auto& feat = dec_out[dec_out.size() - 1 - k];
    sides.push_back(upsample_like(side_[k]->as<torch::nn::Conv2dImpl>()->forward(feat), x));
  }
  sides.push_back(upsample_like(side_[dec_out.size()]->as<torch::nn::Conv2dImpl>()->forward(enc_out.back()), x));
  return torch::sigmoid(fuse_(torch::cat(sides, 1)));
}

}  // namespace aparecium::models
