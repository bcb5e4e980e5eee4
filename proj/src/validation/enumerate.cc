#include "odsim/validation/enumerate.h"

#include <functional>

namespace odsim::validation {

bool is_lossless(const RoundMarginals& m, std::span<const Rational> p) {
  if (m.total_mass != Rational(1)) return false;
  for (std::size_t i = 0; i < m.joint.size(); ++i) {
    if (m.reach[i] == Rational(0)) continue;
    for (std::size_t x = 0; x < p.size(); ++x) {
      if (m.joint[i][x] != p[x] * m.reach[i]) return false;
    }
  }
  return m.reach.front() == Rational(1);
}

std::vector<std::vector<Rational>> simplex_grid(int size, int den) {
  std::vector<std::vector<Rational>> out;
  std::vector<int> counts(size, 0);
  std::function<void(int, int)> fill = [&](int at, int left) {
    if (at == size - 1) {
      counts[at] = left;
      std::vector<Rational> v;
      for (int c : counts) v.emplace_back(c, den);
      out.push_back(std::move(v));
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[at] = c;
      fill(at + 1, left - c);
    }
  };
  fill(0, den);
  return out;
}

}  // namespace odsim::validation
