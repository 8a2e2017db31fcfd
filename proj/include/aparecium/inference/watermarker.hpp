#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aparecium/core/image.hpp"
#include "aparecium/core/message.hpp"
#include "aparecium/models/zoo.hpp"
#include "aparecium/training/crop.hpp"

namespace aparecium::infer {

struct EmbedResult {
  ImageTensor encoded;
  /// 0.5 + 5·(encoded − cover), clamped, for viewing.
  ImageTensor residual;
  double psnr = 0.0;
  double ssim = 0.0;
  std::vector<std::string> warnings;
};

struct ExtractResult {
  LocMask mask;
  bool located = false;
  /// Fraction of mask pixels above 0.5.
  double foreground = 0.0;
  std::optional<CropBox> crop_box;  // photo coordinates
  std::optional<Pattern> pattern;
  std::optional<SoftMessage> scores;
  std::optional<Message> message;
};

/// Minimum fraction of mask pixels above 0.5 for a photo to count as located.
inline constexpr double kLocatedFraction = 0.005;

/// Embedding and extraction against a set of trained networks. Methods are
/// const and run in inference mode; the networks are switched to eval mode
/// on construction.
class Watermarker {
 public:
  explicit Watermarker(models::ModelSet models);
  static Watermarker from_checkpoint(const std::filesystem::path& dir);

  const models::ModelConfig& config() const { return models_.config; }
  int message_bits() const { return models_.config.message_bits; }

  /// Covers of any size: the network runs at the model resolution and the
  /// residual is upsampled back. Gray covers are replicated with a warning.
  EmbedResult embed(const ImageTensor& cover, const Message& msg) const;
  /// B×3×S×S covers at the model resolution, B×bits messages -> B×3×S×S.
  torch::Tensor embed_batch(const torch::Tensor& covers, const torch::Tensor& messages) const;

  ExtractResult extract(const ImageTensor& photo) const;
  /// Same as extract but decodes the caller's box (photo coordinates).
  ExtractResult extract_with_gt_box(const ImageTensor& photo, const CropBox& box) const;
  /// Mask and crop box only.
  ExtractResult locate(const ImageTensor& photo) const;

  /// Message pattern for a message, 1×P×P.
  Pattern pattern_of(const Message& msg) const;

 private:
  ExtractResult run_locator(const ImageTensor& photo) const;
  void decode_box(const ImageTensor& photo, const CropBox& box, ExtractResult& r) const;
  models::ModelSet models_;
};

}  // namespace aparecium::infer
