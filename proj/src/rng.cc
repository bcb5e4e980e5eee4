#include "odsim/rng.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace odsim {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::gaussian() {
  // 1 - u is in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::save() const {
  std::ostringstream out;
  out << consumed_ << ' ' << engine_;
  return out.str();
}

void Rng::load(const std::string& text) {
  std::istringstream in(text);
  std::uint64_t consumed = 0;
  std::mt19937_64 engine;
  if (!(in >> consumed >> engine)) {
    throw std::invalid_argument("Rng::load: malformed state");
  }
  consumed_ = consumed;
  engine_ = engine;
}

}  // namespace odsim
