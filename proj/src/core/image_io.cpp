#include "aparecium/core/image_io.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "aparecium/core/errors.hpp"

namespace aparecium {

ImageTensor from_mat(const cv::Mat& mat) {
  if (mat.empty()) throw InputError("empty image");
  cv::Mat rgb;
  switch (mat.channels()) {
    case 1: rgb = mat; break;
    case 3: cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB); break;
    case 4: cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB); break;
    default: throw InputError("unsupported channel count " + std::to_string(mat.channels()));
  }
  double scale;
  switch (rgb.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw InputError("unsupported pixel depth");
  }
  cv::Mat f;
  rgb.convertTo(f, CV_32F, scale);
  f = f.clone();
  const int c = f.channels();
  auto hwc = torch::from_blob(f.data, {f.rows, f.cols, c}, torch::kFloat).clone();
  return ImageTensor(hwc.permute({2, 0, 1}));
}

cv::Mat to_mat_u8(const ImageTensor& img) {
  auto hwc = (img.tensor() * 255.0).round().clamp(0, 255).to(torch::kU8).permute({1, 2, 0}).contiguous();
  const int c = img.channels();
  cv::Mat m(img.height(), img.width(), c == 1 ? CV_8UC1 : CV_8UC3, hwc.data_ptr<std::uint8_t>());
  cv::Mat out;
  if (c == 3) {
    cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
  } else {
    out = m.clone();
  }
  return out;
}

ImageTensor load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("image not found: " + path.string());
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw InputError("unreadable or unsupported image: " + path.string());
  return from_mat(mat);
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
  auto target = path;
  if (!target.has_extension()) target += ".png";
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  if (!cv::imwrite(target.string(), to_mat_u8(img))) throw InputError("could not write image: " + target.string());
}

}  // namespace aparecium
