#include "aparecium/core/message.hpp"

#include <cctype>
#include <random>

#include "aparecium/core/errors.hpp"

namespace aparecium {

Message::Message(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  if (bits_.empty()) throw InputError("message must contain at least one bit");
  for (auto b : bits_) {
    if (b > 1) throw InputError("message bits must be 0 or 1");
  }
}

Message Message::zeros(int n_bits) {
  if (n_bits <= 0) throw InputError("message length must be positive");
  return Message(std::vector<std::uint8_t>(static_cast<std::size_t>(n_bits), 0));
}

Message Message::from_tensor(const torch::Tensor& bits01) {
  auto flat = bits01.detach().to(torch::kCPU, torch::kFloat).reshape({-1}).contiguous();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(flat.numel()));
  auto acc = flat.accessor<float, 1>();
  for (int64_t i = 0; i < flat.numel(); ++i) bits[static_cast<std::size_t>(i)] = acc[i] > 0.5f ? 1 : 0;
  return Message(std::move(bits));
}

Message Message::complemented() const {
  auto bits = bits_;
  for (auto& b : bits) b = static_cast<std::uint8_t>(1 - b);
  return Message(std::move(bits));
}

torch::Tensor Message::to_tensor() const {
  auto t = torch::empty({size()}, torch::kFloat);
  auto acc = t.accessor<float, 1>();
  for (int i = 0; i < size(); ++i) acc[i] = static_cast<float>(bits_[static_cast<std::size_t>(i)]);
  return t;
}

Message SoftMessage::harden() const {
  if (logits.empty()) throw InputError("empty score vector");
  std::vector<std::uint8_t> bits(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) bits[i] = logits[i] > 0.0f ? 1 : 0;
  return Message(std::move(bits));
}

SoftMessage SoftMessage::from_tensor(const torch::Tensor& scores) {
  auto flat = scores.detach().to(torch::kCPU, torch::kFloat).reshape({-1}).contiguous();
  SoftMessage out;
  out.logits.assign(flat.data_ptr<float>(), flat.data_ptr<float>() + flat.numel());
  return out;
}

Message random_message(std::uint64_t seed, int n_bits) {
  if (n_bits <= 0) throw InputError("message length must be positive");
  std::mt19937_64 gen(seed);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_bits));
  std::uint64_t word = 0;
  for (int i = 0; i < n_bits; ++i) {
    if (i % 64 == 0) word = gen();
    bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return Message(std::move(bits));
}

std::string message_to_hex(const Message& msg) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const int n = msg.size();
  std::string out;
  out.reserve(static_cast<std::size_t>(hex_digits_for(n)));
  for (int d = 0; d < hex_digits_for(n); ++d) {
    int nibble = 0;
    for (int k = 0; k < 4; ++k) {
      const int i = d * 4 + k;
      nibble = (nibble << 1) | (i < n ? msg[i] : 0);
    }
    out.push_back(kDigits[nibble]);
  }
  return out;
}

Message hex_to_message(std::string_view hex, int n_bits) {
  if (n_bits <= 0) throw InputError("message length must be positive");
  const int digits = hex_digits_for(n_bits);
  if (static_cast<int>(hex.size()) != digits) {
    throw InputError("expected " + std::to_string(digits) + " hex digits for a " + std::to_string(n_bits) +
                     "-bit message, got " + std::to_string(hex.size()));
  }
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(n_bits));
  for (int d = 0; d < digits; ++d) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(hex[static_cast<std::size_t>(d)])));
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else {
      throw InputError(std::string("invalid hex digit '") + hex[static_cast<std::size_t>(d)] + "'");
    }
    for (int k = 0; k < 4; ++k) {
      const int i = d * 4 + k;
      const int bit = (v >> (3 - k)) & 1;
      if (i < n_bits) {
        bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bit);
      } else if (bit != 0) {
        throw InputError("padding bits of the last hex digit must be zero");
      }
    }
  }
  return Message(std::move(bits));
}

torch::Tensor stack_messages(std::span<const Message> msgs) {
  if (msgs.empty()) throw InputError("no messages to stack");
  std::vector<torch::Tensor> rows;
  rows.reserve(msgs.size());
  for (const auto& m : msgs) {
    if (m.size() != msgs.front().size()) throw InputError("messages differ in length");
    rows.push_back(m.to_tensor());
  }
  return torch::stack(rows);
}

}  // namespace aparecium
