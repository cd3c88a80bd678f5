#pragma once

// Brute-force reference implementations. They share only the data types with
// the library and recompute everything from definitions.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/grid.hpp"

namespace oracle {

using topo::BinaryMask;
using topo::Connectivity;
using topo::Coord;
using topo::LabelGrid;

/// Whether `off` (a displacement, center excluded or not) lies in the
/// neighborhood for this connectivity and width.
inline bool in_neighborhood(std::size_t ndim, Connectivity conn, unsigned width, const Coord& off) {
  long linf = 0, l1 = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    if (a < 3 - ndim && off[a] != 0) return false;
    linf = std::max<long>(linf, std::labs(off[a]));
    l1 += std::labs(off[a]);
  }
  if (width > 1 || conn == Connectivity::Box) return linf <= static_cast<long>(width);
  if (conn == Connectivity::Four || conn == Connectivity::Six) return l1 <= 1;
  return linf <= 1;
}

struct PairSpec {
  std::vector<bool> a, c;  // class membership
  unsigned width;
};

inline std::vector<PairSpec> pairs_of(const topo::ConstraintSet& cs) {
  std::vector<PairSpec> out;
  const unsigned n = cs.num_classes();
  for (const auto& k : cs.constraints()) {
    PairSpec p{std::vector<bool>(n), std::vector<bool>(n), k.width};
    p.a[k.first] = true;
    if (k.kind == topo::ConstraintKind::Exclusion) {
      p.c[k.second] = true;
    } else {
      for (unsigned id = 0; id < n; ++id) p.c[id] = id != k.first && id != k.second;
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct PairMasks {
  std::vector<std::uint8_t> v_a, v_c;
};

struct Detection {
  std::vector<std::uint8_t> v;
  std::vector<PairMasks> per_pair;
};

/// All ordered site pairs (p, q): p in A, q in C, q - p in the neighborhood.
inline Detection detect(const LabelGrid& g, const topo::ConstraintSet& cs, Connectivity conn) {
  const auto& shape = g.shape();
  const std::size_t n = shape.size();
  Detection out{std::vector<std::uint8_t>(n, 0), {}};
  for (const auto& p : pairs_of(cs)) {
    PairMasks m{std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
    for (std::size_t i = 0; i < n; ++i) {
      if (!p.a[g[i]]) continue;
      const Coord ci = shape.coord(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (!p.c[g[j]]) continue;
        const Coord cj = shape.coord(j);
        const Coord off{cj[0] - ci[0], cj[1] - ci[1], cj[2] - ci[2]};
        if (!in_neighborhood(shape.ndim(), conn, p.width, off)) continue;
        m.v_a[i] = 1;
        m.v_c[j] = 1;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.v[i] |= m.v_a[i] | m.v_c[i];
    out.per_pair.push_back(std::move(m));
  }
  return out;
}

inline double dice(const BinaryMask& p, const BinaryMask& g) {
  std::size_t np = 0, ng = 0, both = 0;
  for (std::size_t i = 0; i < p.bits().size(); ++i) {
    np += p[i];
    ng += g[i];
    both += p[i] && g[i];
  }
  if (np + ng == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(np + ng);
}

/// Foreground sites with a face neighbor that is background or off-grid.
inline std::vector<Coord> surface(const BinaryMask& m) {
  const auto& shape = m.shape();
  std::vector<Coord> out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!m[i]) continue;
    const Coord c = shape.coord(i);
    bool edge = false;
    for (std::size_t a = 3 - shape.ndim(); a < 3 && !edge; ++a)
      for (int s : {-1, 1}) {
        Coord q = c;
        q[a] += s;
        if (!shape.contains(q) || !m[shape.index(q)]) edge = true;
      }
    if (edge) out.push_back(c);
  }
  return out;
}

inline double distance(const Coord& a, const Coord& b, const topo::Spacing& s) {
  double sum = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double d = static_cast<double>(a[k] - b[k]) * s.padded()[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

struct Distances {
  double hd, assd;
};

/// All-pairs surface distances. Requires both surfaces nonempty.
inline Distances surface_distances(const BinaryMask& p, const BinaryMask& g, const topo::Spacing& s) {
  const auto sp = surface(p), sg = surface(g);
  auto directed = [&](const std::vector<Coord>& from, const std::vector<Coord>& to, double& sum) {
    double worst = 0;
    for (const auto& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to) best = std::min(best, distance(a, b, s));
      worst = std::max(worst, best);
      sum += best;
    }
    return worst;
  };
  double sum = 0;
  const double h1 = directed(sp, sg, sum);
  const double h2 = directed(sg, sp, sum);
  return {std::max(h1, h2), sum / static_cast<double>(sp.size() + sg.size())};
}

inline double violations_percent(const LabelGrid& g, const Detection& d) {
  std::size_t fg = 0, v = 0;
  for (std::size_t i = 0; i < g.shape().size(); ++i) {
    fg += g[i] != 0;
    v += d.v[i];
  }
  return fg == 0 ? 0.0 : 100.0 * static_cast<double>(v) / static_cast<double>(fg);
}

inline LabelGrid argmax(const topo::LikelihoodGrid& f) {
  const std::size_t n = f.shape().size();
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    unsigned best = 0;
    for (unsigned k = 1; k < f.num_classes(); ++k)
      if (f.values()[k * n + i] > f.values()[best * n + i]) best = k;
    out[i] = static_cast<std::uint8_t>(best);
  }
  return LabelGrid(f.shape(), f.num_classes(), std::move(out));
}

/// Central difference of `loss` with respect to every entry of f.
template <class Loss>
std::vector<double> finite_difference(const topo::LikelihoodGrid& f, Loss&& loss, double step) {
  std::vector<double> values(f.values().begin(), f.values().end());
  std::vector<double> grad(values.size());
  for (std::size_t e = 0; e < values.size(); ++e) {
    const double saved = values[e];
    values[e] = saved + step;
    const double up = loss(topo::LikelihoodGrid(f.shape(), f.num_classes(), values));
    values[e] = saved - step;
    const double down = loss(topo::LikelihoodGrid(f.shape(), f.num_classes(), values));
    values[e] = saved;
    grad[e] = (up - down) / (2 * step);
  }
  return grad;
}

/// Pixel-wise surrogates written straight from their definitions.
inline double masked_ce(const topo::LikelihoodGrid& f, const LabelGrid& g, const BinaryMask& v) {
  const std::size_t n = g.shape().size();
  double sum = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i]) {
      sum -= std::log(std::max(f.values()[g[i] * n + i], 1e-12));
      ++m;
    }
  return m ? sum / static_cast<double>(m) : 0.0;
}

inline double masked_mse(const topo::LikelihoodGrid& f, const LabelGrid& g, const BinaryMask& v) {
  const std::size_t n = g.shape().size();
  double sum = 0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i]) {
      for (unsigned k = 0; k < f.num_classes(); ++k) {
        const double d = f.values()[k * n + i] - (g[i] == k ? 1.0 : 0.0);
        sum += d * d;
      }
      ++m;
    }
  return m ? sum / static_cast<double>(m * f.num_classes()) : 0.0;
}

inline double masked_dice(const topo::LikelihoodGrid& f, const LabelGrid& g, const BinaryMask& v, double eps) {
  const std::size_t n = g.shape().size();
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) any = any || v[i];
  if (!any) return 0.0;
  double mean = 0;
  for (unsigned k = 0; k < f.num_classes(); ++k) {
    double inter = 0, ff = 0, gg = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (v[i]) {
        const double p = f.values()[k * n + i];
        const double t = g[i] == k ? 1.0 : 0.0;
        inter += p * t;
        ff += p * p;
        gg += t;
      }
    mean += (2 * inter + eps) / (ff + gg + eps);
  }
  return 1.0 - mean / f.num_classes();
}

}  // namespace oracle
