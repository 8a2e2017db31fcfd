#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <torch/torch.h>

namespace aparecium::train {

/// Image files under `root` (recursive, sorted), or the entries of `list`
/// resolved against `root` when a list file is given.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& root,
                                               const std::filesystem::path& list = {});

/// Folder of covers. Images are loaded as RGB and squashed to a square side;
/// decoded images are optionally kept in memory.
class ImageFolder {
 public:
  ImageFolder(std::vector<std::filesystem::path> files, bool cache);
  ImageFolder(const std::filesystem::path& root, const std::filesystem::path& list, bool cache)
      : ImageFolder(list_images(root, list), cache) {}

  std::size_t size() const { return files_.size(); }
  bool empty() const { return files_.empty(); }
  const std::vector<std::filesystem::path>& files() const { return files_; }

  /// 3×side×side in [0,1].
  torch::Tensor image(std::size_t index, int side);
  /// B×3×side×side for the given indices.
  torch::Tensor batch(const std::vector<std::size_t>& indices, int side);

 private:
  std::vector<std::filesystem::path> files_;
  bool cache_;
  std::vector<std::vector<std::pair<int, torch::Tensor>>> cached_;
};

/// Writes `count` procedurally generated RGB images (gradients, shapes,
/// texture) of size side×side as PNG files `img_0000.png`...
std::vector<std::filesystem::path> synth_images(const std::filesystem::path& dir, int count, int side,
                                                std::uint64_t seed);

}  // namespace aparecium::train
