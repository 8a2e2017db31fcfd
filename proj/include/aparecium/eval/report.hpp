#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aparecium/eval/harness.hpp"

namespace aparecium::eval {

inline constexpr const char* kSweepCsvHeader = "distortion,strength,n,mean_ber,std_ber,locate_rate,mean_psnr,mean_ssim";

struct Report {
  QualityResult quality;
  SweepResult sweeps;
  std::optional<SweepRow> combined;
};

/// Writes sweep_<name>.csv and plot_<name>.png per distortion, all_sweeps.csv
/// (with the pessimistic BER and quantiles), combined.csv when present and
/// summary.md. Output depends only on the results.
std::vector<std::filesystem::path> emit_report(const Report& report, const std::filesystem::path& out_dir);

/// Strength-vs-BER line plot (located mean and pessimistic) as a PNG.
void plot_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& path);

}  // namespace aparecium::eval
