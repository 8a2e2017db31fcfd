#include "aparecium/distortion/jpeg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgcodecs.hpp>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/image_io.hpp"

namespace aparecium::distort {

namespace F = torch::nn::functional;

namespace {

constexpr std::array<int, 64> kLuma = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChroma = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

torch::Tensor table_tensor(const std::array<int, 64>& t, torch::Dtype dtype) {
  auto out = torch::empty({8, 8}, torch::kDouble);
  for (int i = 0; i < 64; ++i) out.view({64})[i] = static_cast<double>(t[static_cast<std::size_t>(i)]);
  return out.to(dtype);
}

struct Blocks {
  torch::Tensor coeffs;  // B×3×Hb×Wb×8×8, divided by the tables
  torch::Tensor tables;  // B×3×1×1×8×8
  int64_t h = 0;
  int64_t w = 0;
};

Blocks forward_blocks(const torch::Tensor& img, const std::vector<double>& qualities) {
  if (img.dim() != 4 || img.size(1) != 3) throw InputError("simulated_jpeg needs a B×3×H×W tensor");
  const auto batch = img.size(0);
  if (qualities.size() != 1 && static_cast<int64_t>(qualities.size()) != batch) {
    throw InputError("one JPEG quality per sample required");
  }
  const auto dtype = img.scalar_type();
  Blocks out;
  out.h = img.size(2);
  out.w = img.size(3);
  const int64_t ph = (8 - out.h % 8) % 8;
  const int64_t pw = (8 - out.w % 8) % 8;
  auto x = img;
  if (ph > 0 || pw > 0) {
    F::PadFuncOptions::mode_t mode = torch::kReflect;
    if (out.h <= ph || out.w <= pw) mode = torch::kReplicate;
    x = F::pad(x, F::PadFuncOptions({0, pw, 0, ph}).mode(mode));
  }
  auto r = x.narrow(1, 0, 1) * 255.0;
  auto g = x.narrow(1, 1, 1) * 255.0;
  auto b = x.narrow(1, 2, 1) * 255.0;
  auto y = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
  auto cb = -0.168736 * r - 0.331264 * g + 0.5 * b;
  auto cr = 0.5 * r - 0.418688 * g - 0.081312 * b;
  auto ycc = torch::cat({y, cb, cr}, 1);
  const auto hb = ycc.size(2) / 8;
  const auto wb = ycc.size(3) / 8;
  auto blocks = ycc.reshape({batch, 3, hb, 8, wb, 8}).permute({0, 1, 2, 4, 3, 5});
  auto d = dct_matrix(dtype).to(img.device());
  auto coeffs = torch::matmul(torch::matmul(d, blocks), d.t());

  std::vector<torch::Tensor> per_sample;
  for (int64_t i = 0; i < batch; ++i) {
    const double qd = qualities[qualities.size() == 1 ? 0 : static_cast<std::size_t>(i)];
    const int q = static_cast<int>(std::lround(qd));
    auto lt = table_tensor(scaled_table(kLuma, q), dtype);
    auto ct = table_tensor(scaled_table(kChroma, q), dtype);
    per_sample.push_back(torch::stack({lt, ct, ct}));
  }
  out.tables = torch::stack(per_sample).to(img.device()).view({batch, 3, 1, 1, 8, 8});
  out.coeffs = coeffs / out.tables;
  return out;
}

}  // namespace

double quantize_surrogate(double x) { return std::abs(x) < 0.5 ? x * x * x : x; }

torch::Tensor quantize_surrogate(const torch::Tensor& x) {
  return torch::where(x.abs() < 0.5, x * x * x, x);
}

const std::array<int, 64>& luma_base_table() { return kLuma; }
const std::array<int, 64>& chroma_base_table() { return kChroma; }

std::array<int, 64> scaled_table(const std::array<int, 64>& base, int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("JPEG quality must lie in [1,100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> out{};
  for (std::size_t i = 0; i < 64; ++i) out[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return out;
}

torch::Tensor dct_matrix(torch::Dtype dtype) {
  auto d = torch::empty({8, 8}, torch::kDouble);
  auto acc = d.accessor<double, 2>();
  for (int k = 0; k < 8; ++k) {
    const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
    for (int n = 0; n < 8; ++n) acc[k][n] = a * std::cos(std::numbers::pi * (2 * n + 1) * k / 16.0);
  }
  return d.to(dtype);
}

torch::Tensor jpeg_scaled_coefficients(const torch::Tensor& img, const std::vector<double>& qualities) {
  return forward_blocks(img, qualities).coeffs;
}

torch::Tensor simulated_jpeg(const torch::Tensor& img, const std::vector<double>& qualities) {
  auto blk = forward_blocks(img, qualities);
  auto deq = quantize_surrogate(blk.coeffs) * blk.tables;
  auto d = dct_matrix(img.scalar_type()).to(img.device());
  auto spatial = torch::matmul(torch::matmul(d.t(), deq), d);
  const auto batch = img.size(0);
  const auto hb = spatial.size(2);
  const auto wb = spatial.size(3);
  auto ycc = spatial.permute({0, 1, 2, 4, 3, 5}).reshape({batch, 3, hb * 8, wb * 8});
  auto y = ycc.narrow(1, 0, 1) + 128.0;
  auto cb = ycc.narrow(1, 1, 1);
  auto cr = ycc.narrow(1, 2, 1);
  auto r = y + 1.402 * cr;
  auto g = y - 0.344136 * cb - 0.714136 * cr;
  auto b = y + 1.772 * cb;
  auto rgb = torch::cat({r, g, b}, 1) / 255.0;
  using torch::indexing::Slice;
  rgb = rgb.index({Slice(), Slice(), Slice(0, blk.h), Slice(0, blk.w)});
  return rgb.clamp(0.0, 1.0);
}

torch::Tensor simulated_jpeg(const torch::Tensor& img, Range quality, Rng& rng) {
  if (!quality.within({50.0, 100.0})) throw ConfigError("JPEG quality range must lie within [50,100]");
  std::vector<double> qs;
  for (int64_t b = 0; b < img.size(0); ++b) qs.push_back(rng.uniform(quality.lo, quality.hi));
  return simulated_jpeg(img, qs);
}

torch::Tensor codec_jpeg(const torch::Tensor& img, int quality) {
  if (quality < 1 || quality > 100) throw ConfigError("JPEG quality must lie in [1,100]");
  std::vector<torch::Tensor> outs;
  for (int64_t b = 0; b < img.size(0); ++b) {
    auto mat = to_mat_u8(ImageTensor(img[b].detach().to(torch::kFloat)));
    std::vector<uchar> buf;
    cv::imencode(".jpg", mat, buf, {cv::IMWRITE_JPEG_QUALITY, quality});
    auto decoded = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
    outs.push_back(from_mat(decoded).tensor().to(img.scalar_type()));
  }
  return torch::stack(outs).to(img.device());
}

}  // namespace aparecium::distort
