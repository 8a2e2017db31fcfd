#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <torch/torch.h>

namespace aparecium {

/// Explicit random source. Every stochastic operation takes one of these so
/// that workers can own independent, reproducible streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform(double lo, double hi);
  bool bernoulli(double p);
  /// Inclusive range.
  std::int64_t integer(std::int64_t lo, std::int64_t hi);
  std::uint64_t next_u64() { return engine_(); }

  /// Standard normal tensor drawn through a torch generator seeded from this stream.
  torch::Tensor normal(at::IntArrayRef shape, torch::Dtype dtype = torch::kFloat);

  /// Independent child stream; advances this one by a single draw.
  Rng fork() { return Rng(next_u64()); }

  std::string state() const;
  void set_state(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace aparecium
