#pragma once

#include <array>
#include <map>
#include <string>

#include <torch/torch.h>

namespace aparecium::train {

/// Weighted objective. `terms` holds the unweighted values keyed by
/// "visual", "mask", "pattern", "message"; total = Σ weight·term.
struct LossBreakdown {
  torch::Tensor total;
  std::map<std::string, torch::Tensor> terms;
  std::map<std::string, double> weights;

  /// Detached scalar values for logging.
  std::map<std::string, double> values() const;
};

/// Mean BCE over bits in the numerically stable logit form.
torch::Tensor loss_stage1(const torch::Tensor& message, const torch::Tensor& scores);

/// MSE + (1 − SSIM). The SSIM window shrinks to the largest odd size that
/// fits when the images are smaller than 11×11.
torch::Tensor image_distance(const torch::Tensor& a, const torch::Tensor& b);

/// BCE between a target mask and predicted probabilities.
torch::Tensor mask_bce(const torch::Tensor& target, const torch::Tensor& predicted);

/// λ1·visual(cover, encoded) + λ2·BCE(gt_mask, pred_mask) + λ3·pattern(gt, decoded).
/// Only the first three lambdas are used.
LossBreakdown loss_stage2(const torch::Tensor& cover, const torch::Tensor& encoded, const torch::Tensor& gt_mask,
                          const torch::Tensor& pred_mask, const torch::Tensor& gt_pattern,
                          const torch::Tensor& decoded_pattern, const std::array<double, 4>& lambdas);

/// Stage-2 objective plus λ4·BCE(message, scores).
LossBreakdown loss_stage3(const torch::Tensor& cover, const torch::Tensor& encoded, const torch::Tensor& gt_mask,
                          const torch::Tensor& pred_mask, const torch::Tensor& gt_pattern,
                          const torch::Tensor& decoded_pattern, const torch::Tensor& message,
                          const torch::Tensor& scores, const std::array<double, 4>& lambdas);

}  // namespace aparecium::train
