#pragma once

// Plain-loop reference implementations used to cross-check the tensor code.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

/// Row-major C×H×W image in double precision.
struct Image {
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<double> px;

  double at(int ch, int y, int x) const {
    return px[(static_cast<std::size_t>(ch) * h + y) * w + x];
  }
};

inline double psnr(const Image& a, const Image& b) {
  double sse = 0.0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const double d = a.px[i] - b.px[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(a.px.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

/// Direct evaluation of local SSIM with an explicit Gaussian weight per
/// window position; no separable filtering, no variance shortcut.
inline double ssim(const Image& a, const Image& b, int win = 11, double sigma = 1.5) {
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  std::vector<double> wts(static_cast<std::size_t>(win * win));
  double total = 0.0;
  const double mid = (win - 1) / 2.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      const double v = std::exp(-((i - mid) * (i - mid) + (j - mid) * (j - mid)) / (2.0 * sigma * sigma));
      wts[static_cast<std::size_t>(i * win + j)] = v;
      total += v;
    }
  }
  for (auto& v : wts) v /= total;

  double acc = 0.0;
  long count = 0;
  for (int ch = 0; ch < a.c; ++ch) {
    for (int y = 0; y + win <= a.h; ++y) {
      for (int x = 0; x + win <= a.w; ++x) {
        double ma = 0.0, mb = 0.0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double wt = wts[static_cast<std::size_t>(i * win + j)];
            ma += wt * a.at(ch, y + i, x + j);
            mb += wt * b.at(ch, y + i, x + j);
          }
        }
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (int i = 0; i < win; ++i) {
          for (int j = 0; j < win; ++j) {
            const double wt = wts[static_cast<std::size_t>(i * win + j)];
            const double da = a.at(ch, y + i, x + j) - ma;
            const double db = b.at(ch, y + i, x + j) - mb;
            va += wt * da * da;
            vb += wt * db * db;
            cov += wt * da * db;
          }
        }
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  return acc / static_cast<double>(count);
}

inline double ber(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] != b[i];
  return static_cast<double>(diff) / static_cast<double>(a.size());
}

}  // namespace oracle
