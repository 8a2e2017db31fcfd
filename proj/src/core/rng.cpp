#include "aparecium/core/rng.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <sstream>

#include "aparecium/core/errors.hpp"

namespace aparecium {

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

bool Rng::bernoulli(double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_) < p;
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

torch::Tensor Rng::normal(at::IntArrayRef shape, torch::Dtype dtype) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(next_u64());
  return torch::randn(shape, gen, torch::TensorOptions().dtype(dtype));
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream is(state);
  is >> engine_;
  if (is.fail()) throw InputError("malformed rng state");
}

}  // namespace aparecium
