#include "aparecium/distortion/warp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <opencv2/imgproc.hpp>

#include "aparecium/core/errors.hpp"

namespace aparecium::distort {

namespace F = torch::nn::functional;

WarpTransform WarpTransform::from_forward(const cv::Matx33d& forward) {
  if (std::abs(cv::determinant(forward)) <= 1e-8) throw InputError("warp is not invertible");
  return {forward.inv()};
}

bool WarpTransform::is_identity(double tol) const {
  const auto eye = cv::Matx33d::eye();
  for (int i = 0; i < 9; ++i) {
    if (std::abs(matrix.val[i] / matrix.val[8] - eye.val[i]) > tol) return false;
  }
  return true;
}

cv::Point2d WarpTransform::source_of(cv::Point2d p) const {
  const cv::Vec3d v = matrix * cv::Vec3d(p.x, p.y, 1.0);
  return {v[0] / v[2], v[1] / v[2]};
}

WarpTransform then(const WarpTransform& first, const WarpTransform& second) {
  // out2(p) = out1(M2 p) = in(M1 M2 p)
  return {first.matrix * second.matrix};
}

torch::Tensor warp_image(const torch::Tensor& img, std::span<const WarpTransform> warps, int out_h, int out_w) {
  if (img.dim() != 4) throw InputError("warp_image expects B×C×H×W");
  const auto batch = img.size(0);
  if (warps.size() != 1 && static_cast<int64_t>(warps.size()) != batch) {
    throw InputError("one warp per batch entry required");
  }
  const bool all_identity =
      std::all_of(warps.begin(), warps.end(), [](const WarpTransform& w) { return w.is_identity(); });
  if (all_identity && img.size(2) == out_h && img.size(3) == out_w) return img;
  const double in_h = static_cast<double>(img.size(2));
  const double in_w = static_cast<double>(img.size(3));
  auto xs = torch::arange(out_w, torch::kDouble).view({1, out_w}).expand({out_h, out_w});
  auto ys = torch::arange(out_h, torch::kDouble).view({out_h, 1}).expand({out_h, out_w});
  std::vector<torch::Tensor> grids;
  grids.reserve(static_cast<std::size_t>(batch));
  for (int64_t b = 0; b < batch; ++b) {
    const auto& m = warps[warps.size() == 1 ? 0 : static_cast<std::size_t>(b)].matrix;
    auto u = m(0, 0) * xs + m(0, 1) * ys + m(0, 2);
    auto v = m(1, 0) * xs + m(1, 1) * ys + m(1, 2);
    auto w = m(2, 0) * xs + m(2, 1) * ys + m(2, 2);
    u = u / w;
    v = v / w;
    // align_corners=true: -1 and +1 are the centers of the corner pixels.
    auto un = in_w > 1 ? u * (2.0 / (in_w - 1.0)) - 1.0 : torch::zeros_like(u);
    auto vn = in_h > 1 ? v * (2.0 / (in_h - 1.0)) - 1.0 : torch::zeros_like(v);
    grids.push_back(torch::stack({un, vn}, -1));
  }
  auto grid = torch::stack(grids).to(img.scalar_type()).to(img.device());
  return F::grid_sample(img, grid,
                        F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kZeros).align_corners(true));
}

torch::Tensor warp_image(const torch::Tensor& img, const WarpTransform& warp, int out_h, int out_w) {
  return warp_image(img, std::span<const WarpTransform>(&warp, 1), out_h, out_w);
}

WarpGeometry WarpGeometry::centered(int w, int h, int frame_w, int frame_h) {
  return {w, h, frame_w, frame_h, (frame_w - w) / 2.0, (frame_h - h) / 2.0};
}

WarpGeometry WarpGeometry::fitted(int w, int h, int frame_w, int frame_h) {
  const double sx = w > 1 ? (frame_w - 1.0) / (w - 1.0) : 1.0;
  const double sy = h > 1 ? (frame_h - 1.0) / (h - 1.0) : 1.0;
  const double s = std::min(sx, sy);
  return {w, h, frame_w, frame_h, ((frame_w - 1.0) - s * (w - 1.0)) / 2.0, ((frame_h - 1.0) - s * (h - 1.0)) / 2.0, s};
}

cv::Matx33d WarpGeometry::placement() const {
  return {scale, 0.0, offset_x, 0.0, scale, offset_y, 0.0, 0.0, 1.0};
}

namespace {

std::array<cv::Point2d, 4> placed_corners(const WarpGeometry& geo) {
  const double x0 = geo.offset_x;
  const double y0 = geo.offset_y;
  const double x1 = geo.offset_x + geo.scale * (geo.image_w - 1);
  const double y1 = geo.offset_y + geo.scale * (geo.image_h - 1);
  return {cv::Point2d{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace

cv::Matx33d perspective_forward(const WarpGeometry& geo, const std::array<cv::Point2d, 4>& displacement) {
  const bool still = std::all_of(displacement.begin(), displacement.end(),
                                 [](const cv::Point2d& d) { return d.x == 0.0 && d.y == 0.0; });
  if (still) return cv::Matx33d::eye();
  const auto src = placed_corners(geo);
  // Direct linear solve with h33 = 1, in double precision.
  cv::Matx<double, 8, 8> a;
  cv::Vec<double, 8> rhs;
  for (int i = 0; i < 4; ++i) {
    const auto& p = src[static_cast<std::size_t>(i)];
    const auto q = p + displacement[static_cast<std::size_t>(i)];
    const double r0[8] = {p.x, p.y, 1.0, 0.0, 0.0, 0.0, -p.x * q.x, -p.y * q.x};
    const double r1[8] = {0.0, 0.0, 0.0, p.x, p.y, 1.0, -p.x * q.y, -p.y * q.y};
    for (int j = 0; j < 8; ++j) {
      a(2 * i, j) = r0[j];
      a(2 * i + 1, j) = r1[j];
    }
    rhs[2 * i] = q.x;
    rhs[2 * i + 1] = q.y;
  }
  cv::Vec<double, 8> h;
  if (!cv::solve(a, rhs, h, cv::DECOMP_LU)) throw InputError("degenerate perspective corners");
  return {h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0};
}

bool is_convex_quad(const std::array<cv::Point2d, 4>& pts) {
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = pts[static_cast<std::size_t>(i)];
    const auto& b = pts[static_cast<std::size_t>((i + 1) % 4)];
    const auto& c = pts[static_cast<std::size_t>((i + 2) % 4)];
    const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
    if (std::abs(cross) < 1e-9) return false;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) {
      sign = s;
    } else if (s != sign) {
      return false;
    }
  }
  return true;
}

cv::Matx33d affine_forward(const WarpGeometry& geo, double rotation_deg, double scale, double tx, double ty) {
  if (scale <= 0.0) throw ConfigError("affine scale must be positive");
  const double cx = (geo.frame_w - 1) / 2.0;
  const double cy = (geo.frame_h - 1) / 2.0;
  const double th = rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th) * scale;
  const double s = std::sin(th) * scale;
  // p' = k R (p - c) + c + t
  return {c, -s, cx - c * cx + s * cy + tx, s, c, cy - s * cx - c * cy + ty, 0.0, 0.0, 1.0};
}

std::array<cv::Point2d, 4> sample_perspective_displacement(const WarpGeometry& geo, Range scale_range, Rng& rng) {
  if (!scale_range.within({0.0, 1.0})) throw ConfigError("perspective scale range must lie in [0,1]");
  const auto corners = placed_corners(geo);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double s = rng.uniform(scale_range.lo, scale_range.hi);
    const double mx = s * geo.scale * geo.image_w / 2.0;
    const double my = s * geo.scale * geo.image_h / 2.0;
    std::array<cv::Point2d, 4> disp{};
    std::array<cv::Point2d, 4> moved{};
    for (std::size_t i = 0; i < 4; ++i) {
      disp[i] = {rng.uniform(-mx, mx), rng.uniform(-my, my)};
      moved[i] = corners[i] + disp[i];
    }
    if (is_convex_quad(moved)) return disp;
  }
  return {};
}

WarpResult perspective_warp(const torch::Tensor& img, Range scale_range, Rng& rng) {
  const int h = static_cast<int>(img.size(2));
  const int w = static_cast<int>(img.size(3));
  const auto geo = WarpGeometry::in_place(w, h);
  WarpResult out;
  for (int64_t b = 0; b < img.size(0); ++b) {
    const auto disp = sample_perspective_displacement(geo, scale_range, rng);
    out.warps.push_back(WarpTransform::from_forward(perspective_forward(geo, disp)));
  }
  out.image = warp_image(img, out.warps, h, w);
  return out;
}

WarpResult affine_warp(const torch::Tensor& img, const AffineRanges& ranges, Rng& rng) {
  if (ranges.scale.lo <= 0.0) throw ConfigError("affine scale must be positive");
  const int h = static_cast<int>(img.size(2));
  const int w = static_cast<int>(img.size(3));
  const auto geo = WarpGeometry::in_place(w, h);
  WarpResult out;
  for (int64_t b = 0; b < img.size(0); ++b) {
    const double rot = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi);
    const double scale = rng.uniform(ranges.scale.lo, ranges.scale.hi);
    const double tx = rng.uniform(ranges.translate.lo, ranges.translate.hi) * w;
    const double ty = rng.uniform(ranges.translate.lo, ranges.translate.hi) * h;
    out.warps.push_back(WarpTransform::from_forward(affine_forward(geo, rot, scale, tx, ty)));
  }
  out.image = warp_image(img, out.warps, h, w);
  return out;
}

}  // namespace aparecium::distort
