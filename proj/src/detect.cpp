#include "topo/detect.hpp"

#include <algorithm>
#include <array>
#include <thread>

namespace topo {

Algorithm parse_algorithm(std::string_view name) {
  if (name == "auto") return Algorithm::Auto;
  if (name == "naive") return Algorithm::Naive;
  if (name == "shifted") return Algorithm::Shifted;
  if (name == "conv_direct") return Algorithm::ConvDirect;
  if (name == "conv_fft") return Algorithm::ConvFft;
  throw Error("unknown algorithm '" + std::string(name) +
              "' (expected auto, naive, shifted, conv_direct or conv_fft)");
}

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Auto: return "auto";
    case Algorithm::Naive: return "naive";
    case Algorithm::Shifted: return "shifted";
    case Algorithm::ConvDirect: return "conv_direct";
    case Algorithm::ConvFft: return "conv_fft";
  }
  return "?";
}

double DetectionResult::violations_percent() const {
  if (foreground_count == 0) return 0.0;
  return 100.0 * static_cast<double>(violation_count) / static_cast<double>(foreground_count);
}

namespace {

using Lut = std::array<std::uint8_t, kMaxClasses>;

Lut make_lut(const ClassSet& ids) {
  Lut lut{};
  for (unsigned i = 0; i < kMaxClasses; ++i) lut[i] = ids.test(i) ? 1 : 0;
  return lut;
}

void validate(const LabelGrid& g, std::span<const PairTask> tasks) {
  for (const auto& t : tasks) {
    if (t.kernel.ndim() != g.shape().ndim())
      throw Error("task kernel is " + std::to_string(t.kernel.ndim()) + "D but the grid is " +
                  std::to_string(g.shape().ndim()) + "D");
    if (t.ids_a.none() || t.ids_c.none()) throw Error("pair task has an empty class set");
    if ((t.ids_a & t.ids_c).any()) throw Error("pair task assigns a class to both sides");
    for (unsigned id = g.num_classes(); id < kMaxClasses; ++id)
      if (t.ids_a.test(id) || t.ids_c.test(id))
        throw Error("pair task references class " + std::to_string(id) + " but the grid has " +
                    std::to_string(g.num_classes()) + " classes");
  }
}

DetectionResult assemble(const LabelGrid& g, std::vector<TaskMasks> per_task) {
  DetectionResult r;
  r.v = BinaryMask(g.shape());
  for (const auto& t : per_task) {
    r.v |= t.v_a;
    r.v |= t.v_c;
  }
  r.per_task = std::move(per_task);
  r.violation_count = r.v.popcount();
  r.foreground_count = g.foreground_count();
  return r;
}

// Index ranges [lo, hi) of a destination row such that x + dx stays in [0, n).
struct Span1 {
  std::size_t lo, hi;
};
Span1 valid_range(std::size_t n, std::ptrdiff_t dx) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
  std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx);
  std::ptrdiff_t hi = std::min<std::ptrdiff_t>(sn, sn - dx);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void convolve_rows(std::span<const std::uint8_t> in, std::span<std::uint32_t> out, const Shape& shape,
                   const std::vector<Coord>& support, std::size_t row_begin, std::size_t row_end) {
  const auto& ext = shape.ext();
  for (std::size_t row = row_begin; row < row_end; ++row) {
    const auto z = static_cast<std::ptrdiff_t>(row / ext[1]);
    const auto y = static_cast<std::ptrdiff_t>(row % ext[1]);
    std::uint32_t* dst = out.data() + row * ext[2];
    for (const auto& o : support) {
      const std::ptrdiff_t sz = z + o[0];
      const std::ptrdiff_t sy = y + o[1];
      if (sz < 0 || sy < 0 || sz >= static_cast<std::ptrdiff_t>(ext[0]) ||
          sy >= static_cast<std::ptrdiff_t>(ext[1]))
        continue;
      const std::uint8_t* src = in.data() + (static_cast<std::size_t>(sz) * ext[1] + static_cast<std::size_t>(sy)) * ext[2];
      const auto [lo, hi] = valid_range(ext[2], o[2]);
      for (std::size_t x = lo; x < hi; ++x) dst[x] += src[static_cast<std::ptrdiff_t>(x) + o[2]];
    }
  }
}

}  // namespace

CountGrid convolve_direct(const BinaryMask& mask, const ConnectivityKernel& kernel, unsigned threads) {
  const Shape& shape = mask.shape();
  if (kernel.ndim() != shape.ndim()) throw Error("kernel is " + std::to_string(kernel.ndim()) +
                                                 "D but the grid is " + std::to_string(shape.ndim()) + "D");
  CountGrid out(shape);
  const auto support = kernel.support();
  const std::size_t rows = shape.ext()[0] * shape.ext()[1];
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, rows);
  if (workers == 1) {
    convolve_rows(mask.bits(), out.counts(), shape, support, 0, rows);
    return out;
  }
  // Each worker owns a disjoint band of output rows and reads a halo of the input.
  std::vector<std::jthread> pool;
  const std::size_t band = (rows + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * band, hi = std::min(rows, lo + band);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] { convolve_rows(mask.bits(), out.counts(), shape, support, lo, hi); });
  }
  pool.clear();
  return out;
}

DetectionResult detect_conv(const LabelGrid& g, std::span<const PairTask> tasks, ConvBackend backend,
                            unsigned threads) {
  validate(g, tasks);
  std::vector<TaskMasks> per_task;
  per_task.reserve(tasks.size());
  for (const auto& t : tasks) {
    const BinaryMask m_a = class_mask(g, t.ids_a);
    const BinaryMask m_c = class_mask(g, t.ids_c);
    // V_A = M_A * [N_C > 0], V_C = M_C * [N_A > 0]
    if (backend == ConvBackend::Fft) {
      auto [v_a, v_c] = fft_critical_pair(m_a, m_c, t.kernel);
      per_task.push_back({t, std::move(v_a), std::move(v_c)});
      continue;
    }
    const CountGrid n_a = convolve_direct(m_a, t.kernel, threads);
    const CountGrid n_c = convolve_direct(m_c, t.kernel, threads);
    BinaryMask v_a(g.shape()), v_c(g.shape());
    auto ba = v_a.bits();
    auto bc = v_c.bits();
    auto ma = m_a.bits();
    auto mc = m_c.bits();
    auto ca = n_a.counts();
    auto cc = n_c.counts();
    for (std::size_t i = 0; i < ba.size(); ++i) {
      ba[i] = static_cast<std::uint8_t>(ma[i] & (cc[i] > 0));
      bc[i] = static_cast<std::uint8_t>(mc[i] & (ca[i] > 0));
    }
    per_task.push_back({t, std::move(v_a), std::move(v_c)});
  }
  return assemble(g, std::move(per_task));
}

DetectionResult detect_naive(const LabelGrid& g, std::span<const PairTask> tasks) {
  validate(g, tasks);
  const Shape& shape = g.shape();
  const auto& ext = shape.ext();
  std::vector<TaskMasks> per_task;
  for (const auto& t : tasks) {
    const Lut in_a = make_lut(t.ids_a);
    const Lut in_c = make_lut(t.ids_c);
    const auto offsets = t.kernel.support();
    BinaryMask v_a(shape), v_c(shape);
    for (std::ptrdiff_t z = 0; z < static_cast<std::ptrdiff_t>(ext[0]); ++z)
      for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(ext[1]); ++y)
        for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(ext[2]); ++x) {
          const Coord p{z, y, x};
          const std::size_t i = shape.index(p);
          const std::uint8_t label = g[i];
          for (const auto& o : offsets) {
            const Coord q{z + o[0], y + o[1], x + o[2]};
            if (!shape.contains(q)) continue;
            const std::size_t j = shape.index(q);
            const std::uint8_t other = g[j];
            if (in_a[label] && in_c[other]) {
              v_a.set(i);
              v_c.set(j);
            } else if (in_c[label] && in_a[other]) {
              v_c.set(i);
              v_a.set(j);
            }
          }
        }
    per_task.push_back({t, std::move(v_a), std::move(v_c)});
  }
  return assemble(g, std::move(per_task));
}

DetectionResult detect_shifted(const LabelGrid& g, std::span<const PairTask> tasks) {
  validate(g, tasks);
  const Shape& shape = g.shape();
  const auto& ext = shape.ext();
  const std::size_t n = shape.size();
  auto labels = g.labels();

  // Shifted label map, -1 where the shift pulls from outside the grid.
  std::vector<std::int16_t> shifted(n);
  std::vector<std::uint8_t> m_a_w(n), m_c_w(n);

  std::vector<TaskMasks> per_task;
  for (const auto& t : tasks) {
    // Index 0 of the lookup tables is the outside marker.
    std::array<std::uint8_t, kMaxClasses + 1> in_a{}, in_c{};
    for (unsigned id = 0; id < kMaxClasses; ++id) {
      in_a[id + 1] = t.ids_a.test(id);
      in_c[id + 1] = t.ids_c.test(id);
    }
    BinaryMask m_a = class_mask(g, t.ids_a);
    BinaryMask m_c = class_mask(g, t.ids_c);
    BinaryMask v_a(shape), v_c(shape);
    auto ma = m_a.bits();
    auto mc = m_c.bits();
    auto va = v_a.bits();
    auto vc = v_c.bits();

    for (const auto& w : t.kernel.neighbor_offsets()) {
      // P_w(x) = P(x + w)
      std::fill(shifted.begin(), shifted.end(), std::int16_t{-1});
      const auto [lo, hi] = valid_range(ext[2], w[2]);
      for (std::size_t z = 0; z < ext[0]; ++z) {
        const auto sz = static_cast<std::ptrdiff_t>(z) + w[0];
        if (sz < 0 || sz >= static_cast<std::ptrdiff_t>(ext[0])) continue;
        for (std::size_t y = 0; y < ext[1]; ++y) {
          const auto sy = static_cast<std::ptrdiff_t>(y) + w[1];
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(ext[1])) continue;
          const std::uint8_t* src =
              labels.data() + (static_cast<std::size_t>(sz) * ext[1] + static_cast<std::size_t>(sy)) * ext[2];
          std::int16_t* dst = shifted.data() + (z * ext[1] + y) * ext[2];
          for (std::size_t x = lo; x < hi; ++x) dst[x] = src[static_cast<std::ptrdiff_t>(x) + w[2]];
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto key = static_cast<std::size_t>(shifted[i] + 1);
        m_a_w[i] = in_a[key];
        m_c_w[i] = in_c[key];
      }
      // V_A |= M_A * M_C,w ; V_C |= M_C * M_A,w
      for (std::size_t i = 0; i < n; ++i) {
        va[i] |= static_cast<std::uint8_t>(ma[i] & m_c_w[i]);
        vc[i] |= static_cast<std::uint8_t>(mc[i] & m_a_w[i]);
      }
    }
    per_task.push_back({t, std::move(v_a), std::move(v_c)});
  }
  return assemble(g, std::move(per_task));
}

Algorithm select_algorithm(const Shape& shape, std::span<const PairTask> tasks) {
  std::size_t k = 0;
  for (const auto& t : tasks) k = std::max(k, t.kernel.extent());
  if (k >= kFftMinExtent || shape.size() >= kFftMinSites) return Algorithm::ConvFft;
  return Algorithm::ConvDirect;
}

DetectionResult run_detection(const LabelGrid& g, std::span<const PairTask> tasks, Algorithm algo,
                              unsigned threads) {
  if (algo == Algorithm::Auto) algo = select_algorithm(g.shape(), tasks);
  switch (algo) {
    case Algorithm::Naive: return detect_naive(g, tasks);
    case Algorithm::Shifted: return detect_shifted(g, tasks);
    case Algorithm::ConvDirect: return detect_conv(g, tasks, ConvBackend::Direct, threads);
    case Algorithm::ConvFft: return detect_conv(g, tasks, ConvBackend::Fft, threads);
    case Algorithm::Auto: break;
  }
  throw Error("unreachable algorithm selection");
}

DetectionResult detect(const LabelGrid& g, const ConstraintSet& cs, Connectivity conn, Algorithm algo,
                       unsigned threads) {
  if (cs.num_classes() != g.num_classes())
    throw Error("constraint set declares " + std::to_string(cs.num_classes()) + " classes but the grid has " +
                std::to_string(g.num_classes()));
  const auto tasks = reduce(cs, conn, g.shape().ndim());
  return run_detection(g, tasks, algo, threads);
}

}  // namespace topo
