#include "aparecium/training/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "aparecium/core/errors.hpp"
#include "aparecium/core/image.hpp"
#include "aparecium/core/image_io.hpp"

namespace aparecium::train {

namespace fs = std::filesystem;

namespace {

bool is_image(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff" ||
         ext == ".webp";
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& root, const fs::path& list) {
  if (!fs::is_directory(root)) throw MissingArtifactError("image folder not found: " + root.string());
  std::vector<fs::path> out;
  if (!list.empty()) {
    std::ifstream in(list);
    if (!in) throw MissingArtifactError("split list not found: " + list.string());
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      fs::path p = fs::path(line).is_absolute() ? fs::path(line) : root / line;
      if (!fs::exists(p)) throw MissingArtifactError("listed image not found: " + p.string());
      out.push_back(p);
    }
  } else {
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
  }
  if (out.empty()) throw MissingArtifactError("no images found under " + root.string());
  return out;
}

ImageFolder::ImageFolder(std::vector<fs::path> files, bool cache)
    : files_(std::move(files)), cache_(cache), cached_(files_.size()) {}

torch::Tensor ImageFolder::image(std::size_t index, int side) {
  if (index >= files_.size()) throw InputError("image index out of range");
  if (cache_) {
    for (const auto& [s, t] : cached_[index])
      if (s == side) return t;
  }
  auto img = load_image(files_[index]).to_rgb().tensor();
  torch::Tensor out;
  if (img.size(1) >= side && img.size(2) >= side)
    out = resize_area(img, side, side);
  else
    out = resize_bilinear(img, side, side);
  out = out.clamp(0.0, 1.0).contiguous();
  if (cache_) cached_[index].emplace_back(side, out);
  return out;
}

torch::Tensor ImageFolder::batch(const std::vector<std::size_t>& indices, int side) {
  std::vector<torch::Tensor> items;
  items.reserve(indices.size());
  for (auto i : indices) items.push_back(image(i, side));
  return torch::stack(items);
}

std::vector<fs::path> synth_images(const fs::path& dir, int count, int side, std::uint64_t seed) {
  if (count < 0 || side < 8) throw InputError("synth_images needs count >= 0 and side >= 8");
  fs::create_directories(dir);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto color = [&] { return cv::Scalar(255 * u(gen), 255 * u(gen), 255 * u(gen)); };
  std::vector<fs::path> out;
  for (int n = 0; n < count; ++n) {
    cv::Mat img(side, side, CV_8UC3);
    const auto c0 = color();
    const auto c1 = color();
    const double angle = 2 * CV_PI * u(gen);
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        const double t = 0.5 + 0.5 * ((x - side / 2.0) * std::cos(angle) + (y - side / 2.0) * std::sin(angle)) / side;
        const auto c = c0 * (1 - t) + c1 * t;
        img.at<cv::Vec3b>(y, x) = cv::Vec3b(cv::saturate_cast<uchar>(c[0]), cv::saturate_cast<uchar>(c[1]),
                                            cv::saturate_cast<uchar>(c[2]));
      }
    }
    const int shapes = 3 + static_cast<int>(u(gen) * 8);
    for (int s = 0; s < shapes; ++s) {
      const cv::Point p(static_cast<int>(u(gen) * side), static_cast<int>(u(gen) * side));
      const int r = 2 + static_cast<int>(u(gen) * side / 4);
      switch (static_cast<int>(u(gen) * 3)) {
        case 0: cv::circle(img, p, r, color(), cv::FILLED, cv::LINE_AA); break;
        case 1: cv::rectangle(img, p, p + cv::Point(r, r * 2 / 3 + 1), color(), cv::FILLED); break;
        default:
          cv::line(img, p, cv::Point(static_cast<int>(u(gen) * side), static_cast<int>(u(gen) * side)), color(),
                   1 + static_cast<int>(u(gen) * 4), cv::LINE_AA);
      }
    }
    cv::Mat noise(side, side, CV_32FC3);
    cv::randn(noise, cv::Scalar::all(0), cv::Scalar::all(6 + 10 * u(gen)));
    cv::GaussianBlur(noise, noise, cv::Size(3, 3), 0.8);
    cv::Mat f;
    img.convertTo(f, CV_32FC3);
    f += noise;
    cv::GaussianBlur(f, f, cv::Size(3, 3), 0.5);
    f.convertTo(img, CV_8UC3);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%04d.png", n);
    const auto path = dir / name;
    if (!cv::imwrite(path.string(), img)) throw InputError("cannot write " + path.string());
    out.push_back(path);
  }
  return out;
}

}  // namespace aparecium::train
