#include "aparecium/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "aparecium/core/errors.hpp"

namespace aparecium::eval {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int digits = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string fmt_strength(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::map<std::string, std::vector<SweepRow>> by_distortion(const SweepResult& r, std::vector<std::string>& order) {
  std::map<std::string, std::vector<SweepRow>> groups;
  for (const auto& row : r.rows) {
    if (!groups.count(row.distortion)) order.push_back(row.distortion);
    groups[row.distortion].push_back(row);
  }
  return groups;
}

std::string csv_row(const SweepRow& r) {
  return r.distortion + "," + fmt_strength(r.strength) + "," + std::to_string(r.n) + "," + fmt(r.mean_ber) + "," +
         fmt(r.std_ber) + "," + fmt(r.locate_rate) + "," + fmt(r.mean_psnr) + "," + fmt(r.mean_ssim);
}

std::string csv_row_full(const SweepRow& r) {
  return csv_row(r) + "," + fmt(r.pessimistic_ber) + "," + fmt(r.p50_ber) + "," + fmt(r.p90_ber) + "," +
         std::to_string(r.errors);
}

void write_file(const fs::path& path, const std::string& text, std::vector<fs::path>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  written.push_back(path);
}

}  // namespace

void plot_sweep(const std::vector<SweepRow>& rows, const fs::path& path) {
  if (rows.empty()) throw InputError("nothing to plot");
  const int w = 560, h = 400, left = 70, right = 20, top = 40, bottom = 60;
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  double xmin = rows.front().strength, xmax = xmin;
  for (const auto& r : rows) {
    xmin = std::min(xmin, r.strength);
    xmax = std::max(xmax, r.strength);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  const double ymax = 0.6;
  auto px = [&](double x) { return left + static_cast<int>(std::lround((x - xmin) / (xmax - xmin) * (w - left - right))); };
  auto py = [&](double y) { return h - bottom - static_cast<int>(std::lround(y / ymax * (h - top - bottom))); };
  const cv::Scalar axis(0, 0, 0), grid(220, 220, 220);
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  for (int i = 0; i <= 6; ++i) {
    const double y = ymax * i / 6.0;
    cv::line(img, {left, py(y)}, {w - right, py(y)}, grid, 1);
    cv::putText(img, fmt(y, 2), {8, py(y) + 4}, font, 0.4, axis, 1, cv::LINE_AA);
  }
  for (const auto& r : rows) {
    cv::line(img, {px(r.strength), h - bottom}, {px(r.strength), h - bottom + 5}, axis, 1);
    cv::putText(img, fmt_strength(r.strength), {px(r.strength) - 14, h - bottom + 20}, font, 0.4, axis, 1, cv::LINE_AA);
  }
  cv::line(img, {left, h - bottom}, {w - right, h - bottom}, axis, 1);
  cv::line(img, {left, top}, {left, h - bottom}, axis, 1);
  auto series = [&](auto value, const cv::Scalar& color) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const cv::Point p(px(rows[i].strength), py(std::min(ymax, value(rows[i]))));
      cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
      if (i > 0)
        cv::line(img, {px(rows[i - 1].strength), py(std::min(ymax, value(rows[i - 1])))}, p, color, 2, cv::LINE_AA);
    }
  };
  series([](const SweepRow& r) { return r.pessimistic_ber; }, cv::Scalar(60, 60, 220));
  series([](const SweepRow& r) { return r.mean_ber; }, cv::Scalar(200, 90, 30));
  cv::putText(img, rows.front().distortion + ": strength vs BER", {left, 25}, font, 0.55, axis, 1, cv::LINE_AA);
  cv::putText(img, "strength", {w / 2 - 30, h - 15}, font, 0.45, axis, 1, cv::LINE_AA);
  cv::putText(img, "mean BER (located)", {w - 230, top + 15}, font, 0.4, cv::Scalar(200, 90, 30), 1, cv::LINE_AA);
  cv::putText(img, "BER, unlocated = 0.5", {w - 230, top + 32}, font, 0.4, cv::Scalar(60, 60, 220), 1, cv::LINE_AA);
  if (!cv::imwrite(path.string(), img)) throw InputError("cannot write " + path.string());
}

std::vector<fs::path> emit_report(const Report& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  std::vector<std::string> order;
  const auto groups = by_distortion(report.sweeps, order);

  std::string all = std::string(kSweepCsvHeader) + ",pessimistic_ber,p50_ber,p90_ber,errors\n";
  for (const auto& name : order) {
    const auto& rows = groups.at(name);
    std::string csv = std::string(kSweepCsvHeader) + "\n";
    for (const auto& r : rows) {
      csv += csv_row(r) + "\n";
      all += csv_row_full(r) + "\n";
    }
    write_file(out_dir / ("sweep_" + name + ".csv"), csv, written);
    const auto plot = out_dir / ("plot_" + name + ".png");
    plot_sweep(rows, plot);
    written.push_back(plot);
  }
  write_file(out_dir / "all_sweeps.csv", all, written);
  if (report.combined) {
    write_file(out_dir / "combined.csv",
               std::string(kSweepCsvHeader) + ",pessimistic_ber,p50_ber,p90_ber,errors\n" +
                   csv_row_full(*report.combined) + "\n",
               written);
  }

  const auto& q = report.quality;
  std::string md = "# Evaluation report\n\n## Quality\n\n| images | PSNR (dB) | SSIM | BER (no distortion) | locate rate |\n";
  md += "|---|---|---|---|---|\n";
  md += "| " + std::to_string(q.n) + " | " + fmt(q.mean_psnr, 2) + " | " + fmt(q.mean_ssim, 4) + " | " +
        fmt(q.mean_ber, 4) + " | " + fmt(q.locate_rate, 3) + " |\n\n";
  md += "BER columns: `mean` averages located images only; `pessimistic` counts every unlocated image as 0.5. "
        "p50/p90 are quantiles of the pessimistic per-image BER.\n\n";
  md += "## Digital distortions\n\n";
  for (const auto& name : order) {
    md += "### " + name + "\n\n![" + name + "](plot_" + name + ".png)\n\n";
    md += "| strength | n | mean BER | std | pessimistic | p50 | p90 | locate rate | errors |\n";
    md += "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : groups.at(name)) {
      md += "| " + fmt_strength(r.strength) + " | " + std::to_string(r.n) + " | " + fmt(r.mean_ber, 4) + " | " +
            fmt(r.std_ber, 4) + " | " + fmt(r.pessimistic_ber, 4) + " | " + fmt(r.p50_ber, 4) + " | " +
            fmt(r.p90_ber, 4) + " | " + fmt(r.locate_rate, 3) + " | " + std::to_string(r.errors) + " |\n";
    }
    md += "\n";
  }
  if (report.combined) {
    const auto& c = *report.combined;
    md += "## Combined distortions\n\n| n | mean BER | std | pessimistic | p50 | p90 | locate rate | errors |\n";
    md += "|---|---|---|---|---|---|---|---|\n";
    md += "| " + std::to_string(c.n) + " | " + fmt(c.mean_ber, 4) + " | " + fmt(c.std_ber, 4) + " | " +
          fmt(c.pessimistic_ber, 4) + " | " + fmt(c.p50_ber, 4) + " | " + fmt(c.p90_ber, 4) + " | " +
          fmt(c.locate_rate, 3) + " | " + std::to_string(c.errors) + " |\n";
  }
  write_file(out_dir / "summary.md", md, written);
  return written;
}

}  // namespace aparecium::eval
