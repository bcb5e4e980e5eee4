#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace odsim {

// SplitMix64 mix of (master, stream). Used to give every run, chunk and
// subsystem its own stream so that adding work never perturbs existing
// streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Uniform/gaussian stream over mt19937_64. The number of uniforms drawn is
// tracked so callers can audit how much randomness a round consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // 53-bit uniform in [0, 1).
  double uniform() {
    ++consumed_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double gaussian();

  std::uint64_t uniforms_consumed() const { return consumed_; }

  // Engine state as text (for checkpoints) and its inverse.
  std::string save() const;
  void load(const std::string& text);

 private:
  std::mt19937_64 engine_;
  std::uint64_t consumed_ = 0;
};

}  // namespace odsim
