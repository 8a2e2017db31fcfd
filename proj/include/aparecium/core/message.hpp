#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <torch/torch.h>

namespace aparecium {

inline constexpr int kMessageBits = 196;

/// Fixed-length bit string carried through the watermarking pipeline.
/// The length is a model property (196 at full scale, 64 for the desk profile),
/// so it is stored rather than baked into the type.
class Message {
 public:
  explicit Message(std::vector<std::uint8_t> bits);

  static Message zeros(int n_bits = kMessageBits);
  static Message from_tensor(const torch::Tensor& bits01);

  int size() const { return static_cast<int>(bits_.size()); }
  std::uint8_t operator[](int i) const { return bits_[static_cast<std::size_t>(i)]; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  Message complemented() const;

  /// Float tensor of shape [n] holding 0/1.
  torch::Tensor to_tensor() const;

  bool operator==(const Message&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Raw, unthresholded extractor scores for each bit.
struct SoftMessage {
  std::vector<float> logits;

  int size() const { return static_cast<int>(logits.size()); }
  /// bit = 1 iff score > 0.
  Message harden() const;
  static SoftMessage from_tensor(const torch::Tensor& scores);
};

/// Deterministic i.i.d. uniform bits for a given seed.
Message random_message(std::uint64_t seed, int n_bits = kMessageBits);

/// Big-endian hex: first bit is the MSB of the first digit. Lengths that are
/// not a multiple of four are zero-padded in the low bits of the last digit.
std::string message_to_hex(const Message& msg);
Message hex_to_message(std::string_view hex, int n_bits = kMessageBits);

/// Number of hex digits needed for n bits.
inline int hex_digits_for(int n_bits) { return (n_bits + 3) / 4; }

/// Stack messages into a [B, n] float tensor.
torch::Tensor stack_messages(std::span<const Message> msgs);

}  // namespace aparecium
