#include "aparecium/training/crop.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "aparecium/core/errors.hpp"

namespace aparecium {

double box_iou(const CropBox& a, const CropBox& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  const long inter = std::max(0, ix1 - ix0) * static_cast<long>(std::max(0, iy1 - iy0));
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

std::optional<CropBox> largest_component_box(const torch::Tensor& mask) {
  auto m = mask.detach().to(torch::kCPU, torch::kFloat);
  if (m.dim() == 3) m = m.squeeze(0);
  if (m.dim() != 2) throw InputError("mask must be H×W or 1×H×W");
  auto bin = (m > 0.5).to(torch::kU8).contiguous();
  cv::Mat src(static_cast<int>(bin.size(0)), static_cast<int>(bin.size(1)), CV_8UC1, bin.data_ptr<std::uint8_t>());
  cv::Mat labels;
  cv::Mat stats;
  cv::Mat centroids;
  const int n = cv::connectedComponentsWithStats(src, labels, stats, centroids, 8, CV_32S);
  int best = -1;
  int best_area = 0;
  for (int label = 1; label < n; ++label) {
    const int area = stats.at<int>(label, cv::CC_STAT_AREA);
    if (area > best_area) {
      best_area = area;
      best = label;
    }
  }
  if (best < 0) return std::nullopt;
  CropBox box;
  box.x0 = stats.at<int>(best, cv::CC_STAT_LEFT);
  box.y0 = stats.at<int>(best, cv::CC_STAT_TOP);
  box.x1 = box.x0 + stats.at<int>(best, cv::CC_STAT_WIDTH);
  box.y1 = box.y0 + stats.at<int>(best, cv::CC_STAT_HEIGHT);
  return box;
}

CropBox map_box(const CropBox& box, int from_w, int from_h, int to_w, int to_h) {
  const double sx = static_cast<double>(to_w) / from_w;
  const double sy = static_cast<double>(to_h) / from_h;
  // Small epsilon keeps exact multiples from rounding outward.
  CropBox out;
  out.x0 = std::clamp(static_cast<int>(std::floor(box.x0 * sx + 1e-9)), 0, to_w - 1);
  out.y0 = std::clamp(static_cast<int>(std::floor(box.y0 * sy + 1e-9)), 0, to_h - 1);
  out.x1 = std::clamp(static_cast<int>(std::ceil(box.x1 * sx - 1e-9)), out.x0 + 1, to_w);
  out.y1 = std::clamp(static_cast<int>(std::ceil(box.y1 * sy - 1e-9)), out.y0 + 1, to_h);
  return out;
}

torch::Tensor crop_and_resize(const torch::Tensor& images, const std::vector<CropBox>& boxes, int out_size) {
  if (images.dim() != 4) throw InputError("crop_and_resize expects B×C×H×W");
  if (static_cast<int64_t>(boxes.size()) != images.size(0)) throw InputError("one box per sample required");
  using torch::indexing::Slice;
  std::vector<torch::Tensor> crops;
  crops.reserve(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const auto& box = boxes[b];
    if (box.x0 < 0 || box.y0 < 0 || box.x1 > images.size(3) || box.y1 > images.size(2) || box.width() < 1 ||
        box.height() < 1) {
      throw InputError("crop box outside image bounds");
    }
    auto crop = images.index({Slice(static_cast<int64_t>(b), static_cast<int64_t>(b) + 1), Slice(),
                              Slice(box.y0, box.y1), Slice(box.x0, box.x1)});
    crops.push_back(resize_bilinear(crop, out_size, out_size));
  }
  return torch::cat(crops, 0);
}

CropResult crop_by_mask(const ImageTensor& composite, const LocMask& mask, int out_size) {
  auto found = largest_component_box(mask.tensor());
  if (!found) throw NotLocatedError("not located: mask has no pixel above 0.5");
  const auto box = map_box(*found, mask.size(), mask.size(), composite.width(), composite.height());
  auto crop = crop_and_resize(composite.batched(), {box}, out_size);
  return {ImageTensor(crop.squeeze(0)), box};
}

std::pair<torch::Tensor, std::vector<CropBox>> crop_by_masks(const torch::Tensor& composites,
                                                             const torch::Tensor& masks, int out_size) {
  std::vector<CropBox> boxes;
  for (int64_t b = 0; b < masks.size(0); ++b) {
    auto found = largest_component_box(masks[b]);
    if (!found) throw NotLocatedError("not located: mask has no pixel above 0.5");
    boxes.push_back(map_box(*found, static_cast<int>(masks.size(3)), static_cast<int>(masks.size(2)),
                            static_cast<int>(composites.size(3)), static_cast<int>(composites.size(2))));
  }
  return {crop_and_resize(composites, boxes, out_size), boxes};
}

}  // namespace aparecium
