#pragma once

#include <vector>

#include "aparecium/models/layers.hpp"

namespace aparecium::models {

/// Diffuses a bit string into a single-channel pattern with a stack of
/// stride-2 transposed convolutions (1×1 -> side×side). `channels` lists the
/// hidden widths; there is one block per entry plus the output block, so
/// 2^(channels.size()+1) must equal `pattern_size`.
class MessageProcessor : public Net {
 public:
  MessageProcessor(int message_bits, std::vector<int> channels, int pattern_size);

  /// [B, bits] or [B, bits, 1, 1] -> [B, 1, side, side] in (0,1).
  torch::Tensor forward(const torch::Tensor& x) override;

 private:
  int message_bits_;
  torch::nn::Sequential body_{nullptr};
};

}  // namespace aparecium::models
