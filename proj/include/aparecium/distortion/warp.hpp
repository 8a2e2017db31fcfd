#pragma once

#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "aparecium/core/rng.hpp"

namespace aparecium::distort {

/// Closed interval of a sampled parameter.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool within(const Range& outer) const { return lo >= outer.lo && hi <= outer.hi && lo <= hi; }
  bool operator==(const Range&) const = default;
};

/// 3×3 homography mapping OUTPUT pixel coordinates to INPUT pixel coordinates
/// (pixel centers at integer positions).
struct WarpTransform {
  cv::Matx33d matrix = cv::Matx33d::eye();

  static WarpTransform identity() { return {}; }
  /// Build from a forward map (input -> output).
  static WarpTransform from_forward(const cv::Matx33d& forward);

  cv::Matx33d forward() const { return matrix.inv(); }
  WarpTransform inverse() const { return {matrix.inv()}; }
  double determinant() const { return cv::determinant(matrix); }
  bool is_identity(double tol = 1e-12) const;
  /// Where the output pixel `p` samples the input.
  cv::Point2d source_of(cv::Point2d p) const;
};

/// Warp matrix of "apply `first`, then `second`".
WarpTransform then(const WarpTransform& first, const WarpTransform& second);

/// Bilinear resampling with zero fill outside the input. `warps` holds one
/// transform per batch entry (or a single one broadcast to the batch).
/// Differentiable with respect to `img`.
torch::Tensor warp_image(const torch::Tensor& img, std::span<const WarpTransform> warps, int out_h, int out_w);
torch::Tensor warp_image(const torch::Tensor& img, const WarpTransform& warp, int out_h, int out_w);

/// Where the image being warped sits inside the output frame. For a plain
/// in-place warp the image fills the frame; for composition it is pasted
/// at an offset inside a larger canvas.
struct WarpGeometry {
  int image_w = 0;
  int image_h = 0;
  int frame_w = 0;
  int frame_h = 0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  /// Image-to-frame magnification.
  double scale = 1.0;

  static WarpGeometry in_place(int w, int h) { return {w, h, w, h, 0.0, 0.0}; }
  static WarpGeometry centered(int w, int h, int frame_w, int frame_h);
  /// Largest centered placement that keeps the whole image inside the frame.
  static WarpGeometry fitted(int w, int h, int frame_w, int frame_h);
  cv::Matx33d placement() const;
};

/// Forward map moving the four image corners (as placed in the frame) to
/// `corners + displacement`. Order: TL, TR, BR, BL.
cv::Matx33d perspective_forward(const WarpGeometry& geo, const std::array<cv::Point2d, 4>& displacement);

/// True when the four points form a strictly convex quadrilateral.
bool is_convex_quad(const std::array<cv::Point2d, 4>& pts);

/// Forward affine about the frame center: rotate by `rotation_deg`, scale,
/// then translate by (tx, ty) pixels.
cv::Matx33d affine_forward(const WarpGeometry& geo, double rotation_deg, double scale, double tx, double ty);

struct WarpResult {
  torch::Tensor image;
  std::vector<WarpTransform> warps;
};

struct AffineRanges {
  Range rotation_deg{-15.0, 15.0};
  Range scale{1.0, 2.0};
  /// Fraction of the frame side.
  Range translate{-0.3, 0.3};
};

/// Random perspective: scale s drawn from `scale_range`, each corner
/// displaced uniformly by up to s·side/2 per axis. Non-convex draws are
/// rejected and resampled.
std::array<cv::Point2d, 4> sample_perspective_displacement(const WarpGeometry& geo, Range scale_range, Rng& rng);
WarpResult perspective_warp(const torch::Tensor& img, Range scale_range, Rng& rng);

WarpResult affine_warp(const torch::Tensor& img, const AffineRanges& ranges, Rng& rng);

}  // namespace aparecium::distort
