#pragma once

#include <span>
#include <string>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/grid.hpp"

namespace topo {

enum class Algorithm { Auto, Naive, Shifted, ConvDirect, ConvFft };
enum class ConvBackend { Direct, Fft };

Algorithm parse_algorithm(std::string_view name);
std::string to_string(Algorithm algo);

struct TaskMasks {
  PairTask task;
  BinaryMask v_a;  // A sites with a C site in their neighborhood
  BinaryMask v_c;  // C sites with an A site in their neighborhood
};

struct DetectionResult {
  BinaryMask v;
  std::vector<TaskMasks> per_task;
  std::size_t violation_count = 0;
  std::size_t foreground_count = 0;

  double violations_percent() const;
};

/// Dilation counts: out(x) = sum over kernel support of mask(x + o), with
/// everything outside the grid treated as zero.
CountGrid convolve_direct(const BinaryMask& mask, const ConnectivityKernel& kernel, unsigned threads = 1);
CountGrid convolve_fft(const BinaryMask& mask, const ConnectivityKernel& kernel);
/// Both masks through one complex transform (first in the real part, second in
/// the imaginary part).
std::pair<CountGrid, CountGrid> convolve_fft_pair(const BinaryMask& a, const BinaryMask& c,
                                                  const ConnectivityKernel& kernel);
/// Same transform, thresholded: first is [count(a) > 0], second is [count(c) > 0].
std::pair<BinaryMask, BinaryMask> fft_reach_pair(const BinaryMask& a, const BinaryMask& c,
                                                 const ConnectivityKernel& kernel);
/// Critical masks in one pass: first is a * [count(c) > 0], second is c * [count(a) > 0].
std::pair<BinaryMask, BinaryMask> fft_critical_pair(const BinaryMask& a, const BinaryMask& c,
                                                    const ConnectivityKernel& kernel);

/// Smallest n >= target whose only prime factors are 2, 3 and 5.
std::size_t fft_fast_size(std::size_t target);
/// True when a single-precision round trip over `padded_sites` sites, with
/// `ones` nonzero inputs and a kernel of `taps` entries, provably stays within
/// 0.5 of the exact counts. Otherwise the transform runs in double precision.
bool fft_single_precision_exact(std::size_t padded_sites, std::size_t ones, std::size_t taps);

DetectionResult detect_conv(const LabelGrid& g, std::span<const PairTask> tasks, ConvBackend backend,
                            unsigned threads = 1);
/// Per-site scan of each kernel neighborhood, flagging both ends of a forbidden pair.
DetectionResult detect_naive(const LabelGrid& g, std::span<const PairTask> tasks);
/// One shifted label map per kernel offset, intersected with the unshifted masks.
DetectionResult detect_shifted(const LabelGrid& g, std::span<const PairTask> tasks);

/// FFT when any kernel extent >= kFftMinExtent or the grid has >= kFftMinSites sites.
inline constexpr std::size_t kFftMinExtent = 5;
inline constexpr std::size_t kFftMinSites = std::size_t{1} << 12;
Algorithm select_algorithm(const Shape& shape, std::span<const PairTask> tasks);

DetectionResult run_detection(const LabelGrid& g, std::span<const PairTask> tasks, Algorithm algo,
                              unsigned threads = 1);
DetectionResult detect(const LabelGrid& g, const ConstraintSet& cs, Connectivity conn,
                       Algorithm algo = Algorithm::Auto, unsigned threads = 1);

}  // namespace topo
