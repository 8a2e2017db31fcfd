#include "aparecium/models/processor.hpp"

#include "aparecium/core/errors.hpp"

namespace aparecium::models {

MessageProcessor::MessageProcessor(int message_bits, std::vector<int> channels, int pattern_size)
    : message_bits_(message_bits) {
  const int blocks = static_cast<int>(channels.size()) + 1;
  if (blocks >= 31 || (1 << blocks) != pattern_size) {
    throw ConfigError("processor schedule of " + std::to_string(blocks) + " doubling blocks cannot reach " +
                      std::to_string(pattern_size) + "x" + std::to_string(pattern_size));
  }
  torch::nn::Sequential seq;
  int in = message_bits;
  for (int c : channels) {
    seq->push_back(torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, c, 4).stride(2).padding(1)));
    seq->push_back(group_norm(c));
    seq->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    in = c;
  }
  seq->push_back(torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(in, 1, 4).stride(2).padding(1)));
  seq->push_back(torch::nn::Sigmoid());
  body_ = register_module("body", seq);
}

torch::Tensor MessageProcessor::forward(const torch::Tensor& x) {
  auto in = x.dim() == 2 ? x.view({x.size(0), x.size(1), 1, 1}) : x;
  if (in.dim() != 4 || in.size(1) != message_bits_ || in.size(2) != 1 || in.size(3) != 1) {
    throw InputError("processor expects [B, " + std::to_string(message_bits_) + ", 1, 1]");
  }
  // Bits are centered so that 0 and 1 carry equal energy.
  return body_->forward(in * 2.0 - 1.0);
}

}  // namespace aparecium::models
