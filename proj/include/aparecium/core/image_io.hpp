#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

#include "aparecium/core/image.hpp"

namespace aparecium {

/// Reads PNG/JPEG/BMP/... at native resolution. 8- and 16-bit inputs are
/// normalized to [0,1]; alpha is dropped; gray files give C=1.
ImageTensor load_image(const std::filesystem::path& path);

/// Writes an 8-bit image; the container is chosen from the extension
/// (PNG when none is given).
void save_image(const ImageTensor& img, const std::filesystem::path& path);

/// HWC 8-bit BGR(A) / gray Mat <-> ImageTensor conversions.
ImageTensor from_mat(const cv::Mat& mat);
cv::Mat to_mat_u8(const ImageTensor& img);

}  // namespace aparecium
