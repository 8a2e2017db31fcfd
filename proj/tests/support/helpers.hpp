#pragma once

#include <filesystem>
#include <string>

#include <torch/torch.h>

#include "aparecium/models/zoo.hpp"
#include "oracles.hpp"

namespace testing_support {

inline oracle::Image to_oracle(const torch::Tensor& chw) {
  auto t = chw.detach().to(torch::kDouble).contiguous();
  oracle::Image img;
  img.c = static_cast<int>(t.size(0));
  img.h = static_cast<int>(t.size(1));
  img.w = static_cast<int>(t.size(2));
  img.px.assign(t.data_ptr<double>(), t.data_ptr<double>() + t.numel());
  return img;
}

inline torch::Tensor random_image(std::uint64_t seed, int c, int h, int w) {
  auto gen = at::detail::createCPUGenerator(seed);
  return torch::rand({c, h, w}, gen, torch::TensorOptions().dtype(torch::kFloat));
}

/// Small networks that keep unit tests fast: 16 bits, 32² patterns and images.
inline aparecium::models::ModelConfig tiny_model() {
  aparecium::models::ModelConfig c;
  c.message_bits = 16;
  c.pattern_size = 32;
  c.image_size = 32;
  c.locator_size = 32;
  c.processor_channels = {32, 16, 16, 16};
  c.encoder_base = 8;
  c.encoder_levels = 2;
  c.decoder_base = 8;
  c.decoder_levels = 2;
  c.locator_variant = "tiny";
  c.extractor_depths = {1, 1, 1, 1};
  c.extractor_dims = {8, 16, 32, 64};
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("aparecium_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
