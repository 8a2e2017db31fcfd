#include "aparecium/core/image.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium {

namespace F = torch::nn::functional;

namespace {

torch::Tensor checked_single_channel(torch::Tensor chw, const char* what) {
  if (chw.dim() != 3 || chw.size(0) != 1 || chw.size(1) != chw.size(2)) {
    throw InputError(std::string(what) + " must be a square 1×S×S tensor");
  }
  return chw.detach().to(torch::kFloat).clamp(0.0, 1.0).contiguous();
}

torch::Tensor with_batch(const torch::Tensor& img, bool& squeezed) {
  squeezed = img.dim() == 3;
  if (!squeezed && img.dim() != 4) throw InputError("expected a C×H×W or B×C×H×W tensor");
  return squeezed ? img.unsqueeze(0) : img;
}

}  // namespace

ImageTensor::ImageTensor(torch::Tensor chw) {
  if (chw.dim() != 3) throw InputError("image tensor must be C×H×W");
  if (chw.size(0) != 1 && chw.size(0) != 3) throw InputError("image must have 1 or 3 channels");
  if (chw.size(1) < 1 || chw.size(2) < 1) throw InputError("image must be at least 1×1");
  data_ = chw.detach().to(torch::kCPU, torch::kFloat).clamp(0.0, 1.0).contiguous();
}

ImageTensor ImageTensor::zeros(int channels, int height, int width) {
  return ImageTensor(torch::zeros({channels, height, width}));
}

ImageTensor ImageTensor::filled(int channels, int height, int width, float value) {
  return ImageTensor(torch::full({channels, height, width}, value));
}

ImageTensor ImageTensor::to_rgb() const {
  if (channels() == 3) return *this;
  return ImageTensor(data_.expand({3, height(), width()}).clone());
}

Pattern::Pattern(torch::Tensor chw) : data_(checked_single_channel(std::move(chw), "pattern")) {}

LocMask::LocMask(torch::Tensor chw) : data_(checked_single_channel(std::move(chw), "mask")) {}

double LocMask::foreground_fraction() const {
  return (data_ > 0.5).to(torch::kDouble).mean().item<double>();
}

torch::Tensor resize_bilinear(const torch::Tensor& img, int height, int width) {
  bool squeezed = false;
  auto b = with_batch(img, squeezed);
  if (b.size(2) == height && b.size(3) == width) return img;
  auto out = F::interpolate(b, F::InterpolateFuncOptions()
                                   .size(std::vector<int64_t>{height, width})
                                   .mode(torch::kBilinear)
                                   .align_corners(false));
  return squeezed ? out.squeeze(0) : out;
}

torch::Tensor resize_area(const torch::Tensor& img, int height, int width) {
  bool squeezed = false;
  auto b = with_batch(img, squeezed);
  if (b.size(2) == height && b.size(3) == width) return img;
  auto out = F::adaptive_avg_pool2d(b, F::AdaptiveAvgPool2dFuncOptions({height, width}));
  return squeezed ? out.squeeze(0) : out;
}

}  // namespace aparecium
