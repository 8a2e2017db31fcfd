#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "aparecium/core/kv.hpp"
#include "aparecium/inference/watermarker.hpp"
#include "aparecium/training/dataset.hpp"

namespace aparecium::eval {

struct SweepSpec {
  std::string distortion;
  std::vector<double> strengths;
  int n_images = 20;
  std::uint64_t seed = 0;
};

/// One (distortion, strength) cell. mean_ber/std_ber cover located images
/// only; pessimistic_ber charges 0.5 for every unlocated image. PSNR/SSIM
/// compare the encoded image with its cover.
struct SweepRow {
  std::string distortion;
  double strength = 0.0;
  int n = 0;
  double mean_ber = 0.0;
  double std_ber = 0.0;
  double locate_rate = 0.0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double pessimistic_ber = 0.0;
  double p50_ber = 0.0;
  double p90_ber = 0.0;
  int errors = 0;
  /// Per-image BER with 0.5 for unlocated images, in image order.
  std::vector<double> image_ber;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int errors() const;
};

struct QualityResult {
  int n = 0;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  /// Undistorted embed -> extract.
  double mean_ber = 0.0;
  double locate_rate = 0.0;
};

/// "jpeg" -> "jpeg_codec", "noise" -> "gaussian_noise", "blur" -> "gaussian_blur".
std::string canonical_sweep_name(const std::string& name);

/// Sweepable distortions in report order.
const std::vector<std::string>& sweep_distortions();

/// Five evenly spaced strengths across the training range (quality 100 down
/// to 50 for JPEG, odd kernels 1..9 for blurs).
std::vector<double> default_strengths(const std::string& distortion);

struct EvalConfig {
  std::vector<std::string> distortions = sweep_distortions();
  std::map<std::string, std::vector<double>> strengths;
  int n_images = 20;
  int quality_images = 100;
  std::uint64_t seed = 0;
  bool combined = true;
  /// Overrides the probability of every combined-pipeline distortion.
  std::optional<double> combined_probability;

  std::vector<SweepSpec> sweeps() const;
  void set(const std::string& key, const std::string& value);
  KeyValues to_kv() const;
};

/// Encoded covers and messages shared by every sweep.
class EvalSet {
 public:
  EvalSet(const infer::Watermarker& w, train::ImageFolder& folder, int n, std::uint64_t seed);

  int size() const { return static_cast<int>(messages_.size()); }
  const Message& message(int i) const { return messages_[static_cast<std::size_t>(i)]; }
  const ImageTensor& cover(int i) const { return covers_[static_cast<std::size_t>(i)]; }
  const ImageTensor& encoded(int i) const { return encoded_[static_cast<std::size_t>(i)]; }
  double psnr(int i) const { return psnr_[static_cast<std::size_t>(i)]; }
  double ssim(int i) const { return ssim_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<Message> messages_;
  std::vector<ImageTensor> covers_;
  std::vector<ImageTensor> encoded_;
  std::vector<double> psnr_;
  std::vector<double> ssim_;
};

/// Embeds fresh random messages into the first n covers and averages the
/// fidelity metrics; also reports the undistorted round-trip BER.
QualityResult run_quality_eval(const infer::Watermarker& w, const EvalSet& set);

/// Every (distortion, strength, image): apply the single distortion with
/// probability 1 to the encoded image, extract, record BER and located.
/// Unknown names raise ConfigError listing the valid ones.
SweepResult run_digital_sweep(const infer::Watermarker& w, const EvalSet& set, const std::vector<SweepSpec>& specs);

/// Perspective, translation and the eight pixel distortions at training
/// strengths, each with its own probability; one pooled row "combined".
SweepRow run_combined_distortion_eval(const infer::Watermarker& w, const EvalSet& set, std::uint64_t seed,
                                      std::optional<double> probability = std::nullopt);

}  // namespace aparecium::eval
