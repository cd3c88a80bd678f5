// FFT dilation counts backed by FFTW.
//
// Plans and kernel spectra are cached per padded shape and precision. Planning
// goes through a mutex; execution uses the new-array interface on per-thread
// buffers, which is safe to run concurrently.
//
// Single precision is used whenever the worst-case rounding error of the
// transform round trip stays below one half, so counts still round exactly.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <type_traits>

#include "topo/detect.hpp"

namespace topo {

namespace {

struct F64 {
  using Real = double;
  using Complex = fftw_complex;
  using Plan = fftw_plan;
  static void* alloc(std::size_t bytes) { return fftw_malloc(bytes); }
  static void release(void* p) { fftw_free(p); }
  static Plan plan(int rank, const int* n, Complex* buf, int sign, unsigned flags) {
    return fftw_plan_dft(rank, n, buf, buf, sign, flags);
  }
  static void execute(Plan p, Complex* buf) { fftw_execute_dft(p, buf, buf); }
  static void destroy(Plan p) { fftw_destroy_plan(p); }
};

struct F32 {
  using Real = float;
  using Complex = fftwf_complex;
  using Plan = fftwf_plan;
  static void* alloc(std::size_t bytes) { return fftwf_malloc(bytes); }
  static void release(void* p) { fftwf_free(p); }
  static Plan plan(int rank, const int* n, Complex* buf, int sign, unsigned flags) {
    return fftwf_plan_dft(rank, n, buf, buf, sign, flags);
  }
  static void execute(Plan p, Complex* buf) { fftwf_execute_dft(p, buf, buf); }
  static void destroy(Plan p) { fftwf_destroy_plan(p); }
};

template <class P>
struct Buffer {
  explicit Buffer(std::size_t n)
      : data(static_cast<typename P::Complex*>(P::alloc(sizeof(typename P::Complex) * n))), size(n) {
    if (!data) throw std::bad_alloc();
  }
  ~Buffer() { P::release(data); }
  Buffer(const Buffer&) = delete;
  Buffer& operator=(const Buffer&) = delete;

  typename P::Complex* data;
  std::size_t size;
};

template <class P>
struct PlanPair {
  typename P::Plan forward = nullptr;
  typename P::Plan inverse = nullptr;
  ~PlanPair() {
    if (forward) P::destroy(forward);
    if (inverse) P::destroy(inverse);
  }
};

using PaddedDims = std::array<int, 3>;

struct SpectrumKey {
  PaddedDims dims;
  std::size_t ndim;
  std::size_t extent;
  std::vector<std::uint8_t> weights;
  auto operator<=>(const SpectrumKey&) const = default;
};

std::size_t volume(const PaddedDims& d) { return static_cast<std::size_t>(d[0]) * d[1] * d[2]; }

template <class P>
class FftCache {
 public:
  using Real = typename P::Real;

  static FftCache& instance() {
    static FftCache cache;
    return cache;
  }

  const PlanPair<P>& plans(const PaddedDims& dims, int rank) {
    std::lock_guard lock(mu_);
    auto& slot = plans_[dims];
    if (!slot) {
      auto p = std::make_unique<PlanPair<P>>();
      const std::size_t n = volume(dims);
      Buffer<P> scratch(n);
      const int* shape = dims.data() + (3 - rank);
      const unsigned flags = n >= (1u << 16) ? FFTW_MEASURE : FFTW_ESTIMATE;
      p->forward = P::plan(rank, shape, scratch.data, FFTW_FORWARD, flags);
      p->inverse = P::plan(rank, shape, scratch.data, FFTW_BACKWARD, flags);
      if (!p->forward || !p->inverse) throw Error("FFTW planning failed");
      slot = std::move(p);
    }
    return *slot;
  }

  // Real part of the kernel's spectrum scaled by 1/n. The kernel is real and
  // symmetric, so the imaginary part is zero up to rounding. Computed in double
  // and narrowed.
  std::shared_ptr<const std::vector<Real>> spectrum(const SpectrumKey& key, int rank) {
    {
      std::lock_guard lock(mu_);
      if (auto it = spectra_.find(key); it != spectra_.end()) return it->second;
    }
    const auto& p = FftCache<F64>::instance().plans(key.dims, rank);
    const std::size_t n = volume(key.dims);
    Buffer<F64> buf(n);
    std::fill_n(&buf.data[0][0], 2 * n, 0.0);
    ConnectivityKernel kernel(key.ndim, key.extent, key.weights);
    for (const auto& o : kernel.support()) {
      std::size_t idx = 0;
      for (std::size_t a = 0; a < 3; ++a) {
        const auto wrapped = (o[a] + key.dims[a]) % key.dims[a];
        idx = idx * static_cast<std::size_t>(key.dims[a]) + static_cast<std::size_t>(wrapped);
      }
      buf.data[idx][0] = 1.0;
    }
    F64::execute(p.forward, buf.data);
    auto spec = std::make_shared<std::vector<Real>>(n);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) (*spec)[i] = static_cast<Real>(buf.data[i][0] * scale);
    std::lock_guard lock(mu_);
    return spectra_.emplace(key, std::move(spec)).first->second;
  }

 private:
  std::mutex mu_;
  std::map<PaddedDims, std::unique_ptr<PlanPair<P>>> plans_;
  std::map<SpectrumKey, std::shared_ptr<const std::vector<Real>>> spectra_;
};

// Counts are integers; anything below one half is an empty neighborhood.
std::uint32_t to_count(double v) { return v < 0.5 ? 0u : static_cast<std::uint32_t>(std::llround(v)); }

// Bound on the max-norm error of forward, pointwise multiply, inverse, for
// inputs with `ones` nonzero entries of magnitude 1 and a 0/1 kernel with
// `taps` entries: ||err||_inf <= ||err||_2 <= (2 log2(n) eta + 2u) ||k||_1 ||x||_2,
// with eta ~ 6u per butterfly level.
double round_trip_error_bound(std::size_t n, std::size_t ones, std::size_t taps, double unit) {
  const double levels = std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n, 2))));
  const double eta = 6.0 * unit;
  return (2.0 * levels * eta + 2.0 * unit) * static_cast<double>(taps) * std::sqrt(static_cast<double>(ones));
}

// Transform layout. Padding each axis to ext + r rules out wraparound. When a
// smaller fast size fits the grid itself, the transform is circular instead and
// the band of sites within r of a wrapped face is recounted directly.
struct Layout {
  PaddedDims dims{1, 1, 1};
  std::array<bool, 3> wrapped{false, false, false};
};

std::size_t band_sites(const Shape& shape, const Layout& lay, std::size_t r) {
  std::size_t interior = 1;
  for (std::size_t ax = 0; ax < 3; ++ax) {
    const std::size_t e = shape.ext()[ax];
    interior *= lay.wrapped[ax] ? (e > 2 * r ? e - 2 * r : 0) : e;
  }
  return shape.size() - interior;
}

bool is_full_box(const ConnectivityKernel& kernel) {
  std::size_t full = 1;
  for (std::size_t d = 0; d < kernel.ndim(); ++d) full *= kernel.extent();
  return kernel.popcount() == full;
}

// Work per band site for the exact recount: separable sliding sums for a box,
// a scan of the support otherwise.
std::size_t recount_cost_per_site(const ConnectivityKernel& kernel) {
  return is_full_box(kernel) ? 4 * kernel.ndim() : kernel.popcount();
}

Layout choose_layout(const Shape& shape, const ConnectivityKernel& kernel) {
  const auto r = static_cast<std::size_t>(kernel.radius());
  const auto& ext = shape.ext();
  Layout padded, circular;
  for (std::size_t ax = 3 - shape.ndim(); ax < 3; ++ax) {
    padded.dims[ax] = static_cast<int>(fft_fast_size(ext[ax] + r));
    const std::size_t tight = fft_fast_size(ext[ax]);
    // Circular indexing needs the kernel to fit without overlapping itself.
    if (tight < ext[ax] + r && tight >= 2 * r + 1) {
      circular.dims[ax] = static_cast<int>(tight);
      circular.wrapped[ax] = true;
    } else {
      circular.dims[ax] = padded.dims[ax];
    }
  }
  if (volume(circular.dims) >= volume(padded.dims)) return padded;
  // The recount must stay cheap next to one pass over the grid.
  if (band_sites(shape, circular, r) * recount_cost_per_site(kernel) > shape.size()) return padded;
  return circular;
}

using Box = std::array<std::array<std::size_t, 2>, 3>;  // [lo, hi) per axis

// Exact box counts of `bits` at every site of `region`, by sliding sums along
// one axis at a time over the region grown by `rad` (clipped to the grid).
void box_counts(std::span<const std::uint8_t> bits, const Shape& shape, const Box& region,
                const std::array<std::size_t, 3>& rad, std::vector<std::uint32_t>& work,
                std::vector<std::uint32_t>& line, std::vector<std::uint32_t>& out) {
  const auto& ext = shape.ext();
  Box grown;
  std::array<std::size_t, 3> len{};
  for (std::size_t ax = 0; ax < 3; ++ax) {
    grown[ax][0] = region[ax][0] > rad[ax] ? region[ax][0] - rad[ax] : 0;
    grown[ax][1] = std::min(ext[ax], region[ax][1] + rad[ax]);
    len[ax] = grown[ax][1] - grown[ax][0];
  }
  work.resize(len[0] * len[1] * len[2]);
  for (std::size_t z = 0; z < len[0]; ++z)
    for (std::size_t y = 0; y < len[1]; ++y) {
      const std::uint8_t* src = bits.data() + ((z + grown[0][0]) * ext[1] + y + grown[1][0]) * ext[2] + grown[2][0];
      std::copy_n(src, len[2], work.data() + (z * len[1] + y) * len[2]);
    }
  const std::array<std::size_t, 3> stride{len[1] * len[2], len[2], 1};
  for (std::size_t ax = 0; ax < 3; ++ax) {
    if (rad[ax] == 0) continue;
    const std::size_t a1 = ax == 0 ? 1 : 0, a2 = ax == 2 ? 1 : 2;
    line.resize(len[ax] + 1);
    for (std::size_t i = 0; i < len[a1]; ++i)
      for (std::size_t j = 0; j < len[a2]; ++j) {
        std::uint32_t* base = work.data() + i * stride[a1] + j * stride[a2];
        line[0] = 0;
        for (std::size_t t = 0; t < len[ax]; ++t) line[t + 1] = line[t] + base[t * stride[ax]];
        for (std::size_t t = 0; t < len[ax]; ++t) {
          const std::size_t lo = t > rad[ax] ? t - rad[ax] : 0;
          const std::size_t hi = std::min(len[ax], t + rad[ax] + 1);
          base[t * stride[ax]] = line[hi] - line[lo];
        }
      }
  }
  out.clear();
  for (std::size_t z = region[0][0]; z < region[0][1]; ++z)
    for (std::size_t y = region[1][0]; y < region[1][1]; ++y)
      for (std::size_t x = region[2][0]; x < region[2][1]; ++x)
        out.push_back(work[((z - grown[0][0]) * len[1] + y - grown[1][0]) * len[2] + x - grown[2][0]]);
}

// Exact counts at sites within r of a wrapped face.
template <class Emit>
void recount_band(const BinaryMask& a, const BinaryMask& c, const ConnectivityKernel& kernel, const Layout& lay,
                  Emit& emit) {
  const Shape& shape = a.shape();
  const auto& ext = shape.ext();
  const auto r = static_cast<std::size_t>(kernel.radius());
  auto abits = a.bits();
  auto cbits = c.bits();

  if (is_full_box(kernel)) {
    std::array<std::size_t, 3> rad{};
    for (std::size_t ax = 3 - shape.ndim(); ax < 3; ++ax) rad[ax] = r;
    std::vector<std::uint32_t> work, line, na, nc;
    for (std::size_t ax = 0; ax < 3; ++ax) {
      if (!lay.wrapped[ax]) continue;
      const std::size_t w = std::min(r, ext[ax]);
      for (const auto& side : {std::array<std::size_t, 2>{0, w}, std::array<std::size_t, 2>{ext[ax] - w, ext[ax]}}) {
        Box region{{{0, ext[0]}, {0, ext[1]}, {0, ext[2]}}};
        region[ax] = side;
        box_counts(abits, shape, region, rad, work, line, na);
        box_counts(cbits, shape, region, rad, work, line, nc);
        std::size_t k = 0;
        for (std::size_t z = region[0][0]; z < region[0][1]; ++z)
          for (std::size_t y = region[1][0]; y < region[1][1]; ++y)
            for (std::size_t x = region[2][0]; x < region[2][1]; ++x, ++k)
              emit((z * ext[1] + y) * ext[2] + x, double(na[k]), double(nc[k]));
      }
    }
    return;
  }

  const auto support = kernel.support();
  auto near_face = [&](std::size_t ax, std::size_t v) { return lay.wrapped[ax] && (v < r || v + r >= ext[ax]); };
  auto count_at = [&](std::size_t z, std::size_t y, std::size_t x) {
    const Coord p{static_cast<std::ptrdiff_t>(z), static_cast<std::ptrdiff_t>(y), static_cast<std::ptrdiff_t>(x)};
    std::uint32_t na = 0, nc = 0;
    for (const auto& o : support) {
      const Coord q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      if (!shape.contains(q)) continue;
      const std::size_t j = shape.index(q);
      na += abits[j];
      nc += cbits[j];
    }
    emit(shape.index(p), double(na), double(nc));
  };
  for (std::size_t z = 0; z < ext[0]; ++z)
    for (std::size_t y = 0; y < ext[1]; ++y) {
      if (near_face(0, z) || near_face(1, y)) {
        for (std::size_t x = 0; x < ext[2]; ++x) count_at(z, y, x);
      } else if (lay.wrapped[2]) {
        for (std::size_t x = 0; x < std::min(r, ext[2]); ++x) count_at(z, y, x);
        for (std::size_t x = std::max(r, ext[2] - r); x < ext[2]; ++x) count_at(z, y, x);
      }
    }
}

// Forward transform of (a + i c), multiply by the kernel spectrum, inverse.
// `row(dst, src, len)` receives each output row as interleaved (na, nc) pairs;
// `emit(dst, na, nc)` receives the recounted band sites one at a time.
template <class P, class Row, class Emit>
void fft_pair_with(const BinaryMask& a, const BinaryMask& c, const ConnectivityKernel& kernel,
                   const Layout& lay, Row& row, Emit& emit) {
  const PaddedDims& dims = lay.dims;
  using Real = typename P::Real;
  const Shape& shape = a.shape();
  const int rank = static_cast<int>(shape.ndim());
  const auto& ext = shape.ext();

  auto& cache = FftCache<P>::instance();
  const auto& plans = cache.plans(dims, rank);
  auto spectrum = cache.spectrum(
      SpectrumKey{dims, kernel.ndim(), kernel.extent(),
                  std::vector<std::uint8_t>(kernel.weights().begin(), kernel.weights().end())},
      rank);

  const std::size_t n = volume(dims);
  thread_local std::unique_ptr<Buffer<P>> scratch;
  if (!scratch || scratch->size < n) scratch = std::make_unique<Buffer<P>>(n);
  auto* buf = scratch->data;
  const std::size_t px = static_cast<std::size_t>(dims[2]);
  const std::size_t py = static_cast<std::size_t>(dims[1]);
  auto abits = a.bits();
  auto cbits = c.bits();
  const bool tight = px == ext[2] && py == ext[1] && static_cast<std::size_t>(dims[0]) == ext[0];
  if (!tight) std::fill_n(&buf[0][0], 2 * n, Real{0});
  for (std::size_t z = 0; z < ext[0]; ++z)
    for (std::size_t y = 0; y < ext[1]; ++y) {
      const std::uint8_t* sa = abits.data() + (z * ext[1] + y) * ext[2];
      const std::uint8_t* sc = cbits.data() + (z * ext[1] + y) * ext[2];
      Real* __restrict dst = &buf[(z * py + y) * px][0];
      for (std::size_t x = 0; x < ext[2]; ++x) {
        dst[2 * x] = sa[x];
        dst[2 * x + 1] = sc[x];
      }
    }

  P::execute(plans.forward, buf);
  {
    const Real* __restrict spec = spectrum->data();
    Real* __restrict v = &buf[0][0];
    for (std::size_t i = 0; i < n; ++i) {
      v[2 * i] *= spec[i];
      v[2 * i + 1] *= spec[i];
    }
  }
  P::execute(plans.inverse, buf);

  for (std::size_t z = 0; z < ext[0]; ++z)
    for (std::size_t y = 0; y < ext[1]; ++y) {
      const std::size_t dst = (z * ext[1] + y) * ext[2];
      row(dst, &buf[(z * py + y) * px][0], ext[2]);
    }
  if (lay.wrapped[0] || lay.wrapped[1] || lay.wrapped[2]) recount_band(a, c, kernel, lay, emit);
}

template <class Row, class Emit>
void fft_pair(const BinaryMask& a, const BinaryMask& c, const ConnectivityKernel& kernel, Row&& row, Emit&& emit) {
  const Shape& shape = a.shape();
  if (!(shape == c.shape())) throw Error("mask shape mismatch");
  if (kernel.ndim() != shape.ndim())
    throw Error("kernel is " + std::to_string(kernel.ndim()) + "D but the grid is " +
                std::to_string(shape.ndim()) + "D");
  const Layout lay = choose_layout(shape, kernel);
  if (fft_single_precision_exact(volume(lay.dims), a.popcount() + c.popcount(), kernel.popcount()))
    fft_pair_with<F32>(a, c, kernel, lay, row, emit);
  else
    fft_pair_with<F64>(a, c, kernel, lay, row, emit);
}

// Row adapter for emitters that only need per-site values.
template <class Emit>
auto rows_of(Emit& emit) {
  return [&emit](std::size_t dst, const auto* src, std::size_t len) {
    for (std::size_t x = 0; x < len; ++x) emit(dst + x, double{src[2 * x]}, double{src[2 * x + 1]});
  };
}

}  // namespace

std::size_t fft_fast_size(std::size_t target) {
  for (std::size_t n = std::max<std::size_t>(target, 1);; ++n) {
    std::size_t m = n;
    for (std::size_t p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

bool fft_single_precision_exact(std::size_t padded_sites, std::size_t ones, std::size_t taps) {
  const double unit = std::numeric_limits<float>::epsilon() / 2;
  return round_trip_error_bound(padded_sites, ones, taps, unit) < 0.5;
}

std::pair<CountGrid, CountGrid> convolve_fft_pair(const BinaryMask& a, const BinaryMask& c,
                                                  const ConnectivityKernel& kernel) {
  CountGrid na(a.shape()), nc(a.shape());
  auto oa = na.counts();
  auto oc = nc.counts();
  auto emit = [&](std::size_t i, double va, double vc) {
    oa[i] = to_count(va);
    oc[i] = to_count(vc);
  };
  fft_pair(a, c, kernel, rows_of(emit), emit);
  return {std::move(na), std::move(nc)};
}

std::pair<BinaryMask, BinaryMask> fft_critical_pair(const BinaryMask& a, const BinaryMask& c,
                                                    const ConnectivityKernel& kernel) {
  BinaryMask va(a.shape()), vc(a.shape());
  auto oa = va.bits();
  auto oc = vc.bits();
  auto ma = a.bits();
  auto mc = c.bits();
  auto row = [&](std::size_t dst, const auto* src, std::size_t len) {
    using Real = std::remove_cvref_t<decltype(*src)>;
    const std::uint8_t* __restrict in_a = ma.data() + dst;
    const std::uint8_t* __restrict in_c = mc.data() + dst;
    std::uint8_t* __restrict out_a = oa.data() + dst;
    std::uint8_t* __restrict out_c = oc.data() + dst;
    for (std::size_t x = 0; x < len; ++x) {
      out_a[x] = in_a[x] & static_cast<std::uint8_t>(src[2 * x + 1] >= Real(0.5));
      out_c[x] = in_c[x] & static_cast<std::uint8_t>(src[2 * x] >= Real(0.5));
    }
  };
  auto emit = [&](std::size_t i, double na, double nc) {
    oa[i] = ma[i] & (nc >= 0.5);
    oc[i] = mc[i] & (na >= 0.5);
  };
  fft_pair(a, c, kernel, row, emit);
  return {std::move(va), std::move(vc)};
}

std::pair<BinaryMask, BinaryMask> fft_reach_pair(const BinaryMask& a, const BinaryMask& c,
                                                 const ConnectivityKernel& kernel) {
  BinaryMask ra(a.shape()), rc(a.shape());
  auto oa = ra.bits();
  auto oc = rc.bits();
  auto emit = [&](std::size_t i, double va, double vc) {
    oa[i] = va >= 0.5;
    oc[i] = vc >= 0.5;
  };
  fft_pair(a, c, kernel, rows_of(emit), emit);
  return {std::move(ra), std::move(rc)};
}

CountGrid convolve_fft(const BinaryMask& mask, const ConnectivityKernel& kernel) {
  return convolve_fft_pair(mask, BinaryMask(mask.shape()), kernel).first;
}

}  // namespace topo
