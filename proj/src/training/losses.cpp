#include "aparecium/training/losses.hpp"

#include <algorithm>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/metrics.hpp"

namespace aparecium::train {

namespace F = torch::nn::functional;

namespace {

void same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes())
    throw InputError(std::string(what) + ": shape mismatch");
}

}  // namespace

std::map<std::string, double> LossBreakdown::values() const {
  std::map<std::string, double> out;
  out["total"] = total.item<double>();
  for (const auto& [k, v] : terms) out[k] = v.item<double>();
  return out;
}

torch::Tensor loss_stage1(const torch::Tensor& message, const torch::Tensor& scores) {
  same_shape(message, scores, "message loss");
  return F::binary_cross_entropy_with_logits(scores, message.to(scores.scalar_type()));
}

torch::Tensor image_distance(const torch::Tensor& a, const torch::Tensor& b) {
  same_shape(a, b, "image distance");
  SsimOptions opts;
  const int side = static_cast<int>(std::min(a.size(-1), a.size(-2)));
  if (side < opts.window) opts.window = side % 2 == 1 ? side : side - 1;
  return F::mse_loss(a, b) + (1.0 - ssim_per_sample(a, b, opts).mean());
}

torch::Tensor mask_bce(const torch::Tensor& target, const torch::Tensor& predicted) {
  same_shape(target, predicted, "mask loss");
  // binary_cross_entropy clamps log terms at -100, so saturated sigmoids stay finite.
  return F::binary_cross_entropy(predicted, target.to(predicted.scalar_type()));
}

LossBreakdown loss_stage2(const torch::Tensor& cover, const torch::Tensor& encoded, const torch::Tensor& gt_mask,
                          const torch::Tensor& pred_mask, const torch::Tensor& gt_pattern,
                          const torch::Tensor& decoded_pattern, const std::array<double, 4>& lambdas) {
  LossBreakdown b;
  b.terms["visual"] = image_distance(cover, encoded);
  b.terms["mask"] = mask_bce(gt_mask, pred_mask);
  b.terms["pattern"] = image_distance(gt_pattern, decoded_pattern);
  b.weights = {{"visual", lambdas[0]}, {"mask", lambdas[1]}, {"pattern", lambdas[2]}};
  b.total = lambdas[0] * b.terms["visual"] + lambdas[1] * b.terms["mask"] + lambdas[2] * b.terms["pattern"];
  return b;
}

LossBreakdown loss_stage3(const torch::Tensor& cover, const torch::Tensor& encoded, const torch::Tensor& gt_mask,
                          const torch::Tensor& pred_mask, const torch::Tensor& gt_pattern,
                          const torch::Tensor& decoded_pattern, const torch::Tensor& message,
                          const torch::Tensor& scores, const std::array<double, 4>& lambdas) {
  auto b = loss_stage2(cover, encoded, gt_mask, pred_mask, gt_pattern, decoded_pattern, lambdas);
  b.terms["message"] = loss_stage1(message, scores);
  b.weights["message"] = lambdas[3];
  b.total = b.total + lambdas[3] * b.terms["message"];
  return b;
}

}  // namespace aparecium::train
