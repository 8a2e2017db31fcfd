#include "aparecium/core/metrics.hpp"

#include <cmath>

#include "aparecium/core/errors.hpp"

namespace aparecium {

namespace F = torch::nn::functional;

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw InputError("shape mismatch between compared images");
}

}  // namespace

double psnr(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a.tensor(), b.tensor());
  const double mse = (a.tensor().to(torch::kDouble) - b.tensor().to(torch::kDouble)).pow(2).mean().item<double>();
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(1.0 / mse);
}

torch::Tensor gaussian_taps(int size, double sigma, torch::Dtype dtype) {
  auto x = torch::arange(size, torch::kDouble) - (size - 1) / 2.0;
  auto g = torch::exp(-(x * x) / (2.0 * sigma * sigma));
  return (g / g.sum()).to(dtype);
}

torch::Tensor ssim_per_sample(const torch::Tensor& a, const torch::Tensor& b, const SsimOptions& opts) {
  require_same_shape(a, b);
  if (a.dim() != 4) throw InputError("ssim expects B×C×H×W tensors");
  if (a.size(2) < opts.window || a.size(3) < opts.window) {
    throw InputError("image is smaller than the SSIM window");
  }
  const auto channels = a.size(1);
  auto g = gaussian_taps(opts.window, opts.sigma, a.scalar_type()).to(a.device());
  auto kernel = torch::outer(g, g).expand({channels, 1, opts.window, opts.window}).contiguous();
  auto blur = [&](const torch::Tensor& t) {
    return F::conv2d(t, kernel, F::Conv2dFuncOptions().groups(channels));
  };
  auto mu_a = blur(a);
  auto mu_b = blur(b);
  auto mu_aa = mu_a * mu_a;
  auto mu_bb = mu_b * mu_b;
  auto mu_ab = mu_a * mu_b;
  auto var_a = blur(a * a) - mu_aa;
  auto var_b = blur(b * b) - mu_bb;
  auto cov = blur(a * b) - mu_ab;
  auto num = (2.0 * mu_ab + opts.c1) * (2.0 * cov + opts.c2);
  auto den = (mu_aa + mu_bb + opts.c1) * (var_a + var_b + opts.c2);
  return (num / den).flatten(1).mean(1);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a.tensor(), b.tensor());
  auto v = ssim_per_sample(a.batched().to(torch::kDouble), b.batched().to(torch::kDouble));
  return v.item<double>();
}

double ber(const Message& truth, const Message& got) {
  if (truth.size() != got.size()) throw InputError("message length mismatch");
  int diff = 0;
  for (int i = 0; i < truth.size(); ++i) diff += truth[i] != got[i] ? 1 : 0;
  return static_cast<double>(diff) / truth.size();
}

}  // namespace aparecium
