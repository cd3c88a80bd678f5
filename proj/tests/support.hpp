#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/grid.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline topo::Shape random_shape(Rng& rng, std::size_t ndim, std::size_t max_extent) {
  std::vector<std::size_t> dims(ndim);
  for (auto& d : dims) d = uniform(rng, 1, max_extent);
  return topo::Shape(dims);
}

/// Labels drawn from a few random "blobs" so forbidden pairs are neither
/// absent nor everywhere.
inline topo::LabelGrid random_grid(Rng& rng, const topo::Shape& shape, unsigned classes) {
  std::vector<std::uint8_t> labels(shape.size());
  const bool blocky = uniform(rng, 0, 1) == 1;
  const std::uint8_t base = static_cast<std::uint8_t>(uniform(rng, 0, classes - 1));
  for (auto& l : labels) l = blocky ? base : static_cast<std::uint8_t>(uniform(rng, 0, classes - 1));
  if (blocky) {
    const std::size_t blobs = uniform(rng, 1, 6);
    for (std::size_t b = 0; b < blobs; ++b) {
      const auto label = static_cast<std::uint8_t>(uniform(rng, 0, classes - 1));
      topo::Coord lo{}, hi{};
      for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t e = shape.ext()[a];
        lo[a] = static_cast<std::ptrdiff_t>(uniform(rng, 0, e - 1));
        hi[a] = static_cast<std::ptrdiff_t>(uniform(rng, static_cast<std::size_t>(lo[a]), e - 1));
      }
      for (std::ptrdiff_t z = lo[0]; z <= hi[0]; ++z)
        for (std::ptrdiff_t y = lo[1]; y <= hi[1]; ++y)
          for (std::ptrdiff_t x = lo[2]; x <= hi[2]; ++x) labels[shape.index({z, y, x})] = label;
    }
  }
  return topo::LabelGrid(shape, classes, std::move(labels));
}

inline topo::BinaryMask random_mask(Rng& rng, const topo::Shape& shape, double density) {
  std::bernoulli_distribution bit(density);
  std::vector<std::uint8_t> bits(shape.size());
  for (auto& b : bits) b = bit(rng) ? 1 : 0;
  return topo::BinaryMask(shape, std::move(bits));
}

/// Adds random constraints one at a time, keeping each only if the set stays
/// valid.
inline topo::ConstraintSet random_constraints(Rng& rng, unsigned classes, unsigned max_width) {
  std::vector<topo::Constraint> kept;
  const std::size_t tries = uniform(rng, 1, 4);
  for (std::size_t t = 0; t < tries; ++t) {
    const auto a = static_cast<unsigned>(uniform(rng, 1, classes - 1));
    const auto b = static_cast<unsigned>(uniform(rng, 0, classes - 1));
    if (a == b) continue;
    const auto w = static_cast<unsigned>(uniform(rng, 1, max_width));
    const bool contain = classes >= 3 && b != 0 && uniform(rng, 0, 1) == 1;
    auto candidate = kept;
    candidate.push_back(contain ? topo::Constraint::containment(a, b, w) : topo::Constraint::exclusion(a, b, w));
    try {
      topo::ConstraintSet probe(classes, candidate);
      kept = std::move(candidate);
    } catch (const topo::Error&) {
    }
  }
  if (kept.empty()) kept.push_back(topo::Constraint::exclusion(1, 0, 1));
  return topo::ConstraintSet(classes, kept);
}

inline topo::Connectivity random_connectivity(Rng& rng, std::size_t ndim) {
  using C = topo::Connectivity;
  const C options2[] = {C::Four, C::Eight, C::Box};
  const C options3[] = {C::Six, C::TwentySix, C::Box};
  return ndim == 2 ? options2[uniform(rng, 0, 2)] : options3[uniform(rng, 0, 2)];
}

/// Per-site probabilities; each site's argmax beats the runner-up by at least
/// `margin` and every entry is at least `floor`.
inline topo::LikelihoodGrid random_likelihood(Rng& rng, const topo::Shape& shape, unsigned classes,
                                              double margin = 0.02, double floor = 0.02) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = shape.size();
  std::vector<double> v(n * classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> p(classes);
    for (;;) {
      double sum = 0;
      for (auto& x : p) sum += (x = floor + u(rng));
      for (auto& x : p) x /= sum;
      auto sorted = p;
      std::sort(sorted.begin(), sorted.end());
      bool ok = sorted.back() - sorted[classes - 2] >= margin;
      for (double x : p) ok = ok && x >= floor / 2;
      if (ok) break;
    }
    for (unsigned k = 0; k < classes; ++k) v[k * n + i] = p[k];
  }
  return topo::LikelihoodGrid(shape, classes, std::move(v), true);
}

}  // namespace testing
