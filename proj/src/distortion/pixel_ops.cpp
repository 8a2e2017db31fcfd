#include "aparecium/distortion/pixel_ops.hpp"

#include <cmath>
#include <numbers>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/metrics.hpp"

namespace aparecium::distort {

namespace F = torch::nn::functional;

namespace {

torch::Tensor per_sample(const torch::Tensor& v, const torch::Tensor& img) {
  return v.to(img.scalar_type()).to(img.device()).reshape({-1, 1, 1, 1});
}

void require_rgb(const torch::Tensor& img, const char* op) {
  if (img.dim() != 4 || img.size(1) != 3) throw InputError(std::string(op) + " needs a B×3×H×W tensor");
}

torch::Tensor uniform_deltas(int64_t n, double cap, Rng& rng) {
  auto t = torch::empty({n}, torch::kDouble);
  for (int64_t i = 0; i < n; ++i) t[i] = rng.uniform(-cap, cap);
  return t;
}

}  // namespace

void validate_erase_ranges(Range area, Range aspect) {
  if (!area.within(kEraseAreaBounds)) throw ConfigError("erase area range must lie within [0.02, 0.33]");
  if (!aspect.within(kEraseAspectBounds)) throw ConfigError("erase aspect range must lie within [0.3, 3.3]");
}

EraseBox sample_erase_box(int height, int width, Range area, Range aspect, Rng& rng) {
  validate_erase_ranges(area, aspect);
  const double total = static_cast<double>(height) * width;
  for (int attempt = 0;; ++attempt) {
    // Rounded sizes can leave the caps on small images; redraw, and as a
    // last resort round up so the area is never below the drawn fraction.
    const bool last = attempt >= 1000;
    if (attempt > 2000) throw ConfigError("erase box does not fit a " + std::to_string(height) + "x" +
                                          std::to_string(width) + " image");
    EraseBox box;
    box.area_frac = rng.uniform(area.lo, area.hi);
    box.aspect = rng.uniform(aspect.lo, aspect.hi);
    const double a = box.area_frac * total;
    auto side = [last](double v) { return static_cast<int>(last ? std::ceil(v) : std::lround(v)); };
    box.h = side(std::sqrt(a * box.aspect));
    box.w = side(std::sqrt(a / box.aspect));
    if (box.h < 1 || box.w < 1 || box.h > height || box.w > width) continue;
    const double realized = box.h * static_cast<double>(box.w) / total;
    const double ratio = static_cast<double>(box.h) / box.w;
    if (!last && (!kEraseAreaBounds.contains(realized) || !kEraseAspectBounds.contains(ratio))) continue;
    box.y0 = static_cast<int>(rng.integer(0, height - box.h));
    box.x0 = static_cast<int>(rng.integer(0, width - box.w));
    return box;
  }
}

torch::Tensor erase(const torch::Tensor& img, const std::vector<EraseBox>& boxes) {
  if (static_cast<int64_t>(boxes.size()) != img.size(0)) throw InputError("one erase box per sample required");
  auto keep = torch::ones({img.size(0), 1, img.size(2), img.size(3)}, img.options().requires_grad(false));
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const auto& r = boxes[b];
    using torch::indexing::Slice;
    keep.index_put_({static_cast<int64_t>(b), 0, Slice(r.y0, r.y0 + r.h), Slice(r.x0, r.x0 + r.w)}, 0.0);
  }
  return img * keep;
}

torch::Tensor random_erase(const torch::Tensor& img, Range area, Range aspect, Rng& rng) {
  std::vector<EraseBox> boxes;
  for (int64_t b = 0; b < img.size(0); ++b) {
    boxes.push_back(sample_erase_box(static_cast<int>(img.size(2)), static_cast<int>(img.size(3)), area, aspect, rng));
  }
  return erase(img, boxes);
}

torch::Tensor rgb_to_gray(const torch::Tensor& img) {
  require_rgb(img, "rgb_to_gray");
  return 0.299 * img.narrow(1, 0, 1) + 0.587 * img.narrow(1, 1, 1) + 0.114 * img.narrow(1, 2, 1);
}

torch::Tensor adjust_brightness(const torch::Tensor& img, const torch::Tensor& delta) {
  return (img * (1.0 + per_sample(delta, img))).clamp(0.0, 1.0);
}

torch::Tensor adjust_contrast(const torch::Tensor& img, const torch::Tensor& delta) {
  auto mean = img.size(1) == 3 ? rgb_to_gray(img).mean({1, 2, 3}, true) : img.mean({1, 2, 3}, true);
  return ((img - mean) * (1.0 + per_sample(delta, img)) + mean).clamp(0.0, 1.0);
}

torch::Tensor adjust_saturation(const torch::Tensor& img, const torch::Tensor& delta) {
  require_rgb(img, "saturation");
  auto gray = rgb_to_gray(img);
  return (gray + (img - gray) * (1.0 + per_sample(delta, img))).clamp(0.0, 1.0);
}

torch::Tensor adjust_hue(const torch::Tensor& img, const torch::Tensor& delta) {
  require_rgb(img, "hue");
  auto r = img.narrow(1, 0, 1);
  auto g = img.narrow(1, 1, 1);
  auto b = img.narrow(1, 2, 1);
  auto y = 0.299 * r + 0.587 * g + 0.114 * b;
  auto i = 0.596 * r - 0.274 * g - 0.322 * b;
  auto q = 0.211 * r - 0.523 * g + 0.312 * b;
  auto th = per_sample(delta, img) * (2.0 * std::numbers::pi);
  auto c = torch::cos(th);
  auto s = torch::sin(th);
  auto i2 = c * i - s * q;
  auto q2 = s * i + c * q;
  auto r2 = y + 0.956 * i2 + 0.621 * q2;
  auto g2 = y - 0.272 * i2 - 0.647 * q2;
  auto b2 = y - 1.106 * i2 + 1.703 * q2;
  return torch::cat({r2, g2, b2}, 1).clamp(0.0, 1.0);
}

torch::Tensor color_jitter(const torch::Tensor& img, const JitterCaps& caps, Rng& rng) {
  require_rgb(img, "color_jitter");
  if (caps.brightness < 0 || caps.brightness > 0.3 || caps.contrast < 0 || caps.contrast > 0.3 ||
      caps.saturation < 0 || caps.saturation > 0.3 || caps.hue < 0 || caps.hue > 0.1) {
    throw ConfigError("color jitter caps exceed [0,0.3] (hue [0,0.1])");
  }
  const auto n = img.size(0);
  auto out = img;
  if (caps.brightness > 0) out = adjust_brightness(out, uniform_deltas(n, caps.brightness, rng));
  if (caps.contrast > 0) out = adjust_contrast(out, uniform_deltas(n, caps.contrast, rng));
  if (caps.saturation > 0) out = adjust_saturation(out, uniform_deltas(n, caps.saturation, rng));
  if (caps.hue > 0) out = adjust_hue(out, uniform_deltas(n, caps.hue, rng));
  return out;
}

torch::Tensor gaussian_kernel2d(int kernel, double sigma, torch::Dtype dtype) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("blur kernel size must be odd and positive");
  if (sigma <= 0) throw ConfigError("blur sigma must be positive");
  auto g = gaussian_taps(kernel, sigma, torch::kDouble);
  return torch::outer(g, g).to(dtype);
}

torch::Tensor motion_kernel2d(int kernel, double angle_deg, torch::Dtype dtype) {
  if (kernel < 1 || kernel % 2 == 0) throw ConfigError("motion kernel size must be odd and positive");
  auto k = torch::zeros({kernel, kernel}, torch::kDouble);
  auto acc = k.accessor<double, 2>();
  const double th = angle_deg * std::numbers::pi / 180.0;
  const int half = kernel / 2;
  for (int t = -half; t <= half; ++t) {
    const double x = half + t * std::cos(th);
    const double y = half + t * std::sin(th);
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    for (int j = 0; j < 4; ++j) {
      if (w[j] <= 0 || xs[j] < 0 || ys[j] < 0 || xs[j] >= kernel || ys[j] >= kernel) continue;
      acc[ys[j]][xs[j]] += w[j];
    }
  }
  return (k / k.sum()).to(dtype);
}

torch::Tensor filter2d(const torch::Tensor& img, const std::vector<torch::Tensor>& kernels) {
  if (static_cast<int64_t>(kernels.size()) != img.size(0)) throw InputError("one kernel per sample required");
  const int64_t k = kernels.front().size(0);
  const int64_t pad = k / 2;
  const auto channels = img.size(1);
  auto padded = img;
  if (pad > 0) {
    F::PadFuncOptions::mode_t mode = torch::kReflect;
    if (img.size(2) <= pad || img.size(3) <= pad) mode = torch::kReplicate;
    padded = F::pad(img, F::PadFuncOptions({pad, pad, pad, pad}).mode(mode));
  }
  // Fold the batch into channels so one grouped conv handles per-sample kernels.
  const auto b = img.size(0);
  std::vector<torch::Tensor> ks;
  for (const auto& kk : kernels) ks.push_back(kk.to(img.scalar_type()).to(img.device()).expand({channels, 1, k, k}));
  auto weight = torch::cat(ks, 0);
  auto folded = padded.reshape({1, b * channels, padded.size(2), padded.size(3)});
  auto out = F::conv2d(folded, weight, F::Conv2dFuncOptions().groups(b * channels));
  return out.reshape({b, channels, img.size(2), img.size(3)});
}

torch::Tensor gaussian_blur(const torch::Tensor& img, int kernel, const std::vector<double>& sigmas) {
  std::vector<torch::Tensor> ks;
  for (double s : sigmas) ks.push_back(gaussian_kernel2d(kernel, s, img.scalar_type()));
  return filter2d(img, ks).clamp(0.0, 1.0);
}

torch::Tensor gaussian_blur(const torch::Tensor& img, int kernel, Range sigma, Rng& rng) {
  std::vector<double> sigmas;
  for (int64_t b = 0; b < img.size(0); ++b) sigmas.push_back(rng.uniform(sigma.lo, sigma.hi));
  return gaussian_blur(img, kernel, sigmas);
}

torch::Tensor motion_blur(const torch::Tensor& img, int kernel, const std::vector<double>& angles_deg) {
  std::vector<torch::Tensor> ks;
  for (double a : angles_deg) ks.push_back(motion_kernel2d(kernel, a, img.scalar_type()));
  return filter2d(img, ks).clamp(0.0, 1.0);
}

torch::Tensor motion_blur(const torch::Tensor& img, int kernel, Rng& rng) {
  std::vector<double> angles;
  for (int64_t b = 0; b < img.size(0); ++b) angles.push_back(rng.uniform(0.0, 360.0));
  return motion_blur(img, kernel, angles);
}

torch::Tensor gaussian_noise(const torch::Tensor& img, double variance, Rng& rng, double mean, bool clamp) {
  if (variance < 0) throw ConfigError("noise variance must be non-negative");
  if (variance == 0.0 && mean == 0.0) return img;
  auto noise = rng.normal(img.sizes(), img.scalar_type()).to(img.device()) * std::sqrt(variance) + mean;
  auto out = img + noise;
  return clamp ? out.clamp(0.0, 1.0) : out;
}

}  // namespace aparecium::distort
