#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topo/detect.hpp"

namespace topo {

struct BenchOptions {
  std::vector<Algorithm> algorithms{Algorithm::Naive, Algorithm::Shifted, Algorithm::ConvDirect, Algorithm::ConvFft};
  std::vector<std::size_t> sizes{256};            // N, per-axis extent
  std::vector<std::size_t> kernel_extents{3, 5};  // k = 2d + 1, odd and >= 3
  std::size_t repeats = 3;
  std::size_t ndim = 2;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Samples shorter than this are batched so the clock can resolve them.
  double min_sample_seconds = 1e-3;
};

/// One timed repeat; `seconds` is per detection call.
struct BenchRow {
  Algorithm algorithm;
  std::size_t ndim;
  std::size_t n;
  std::size_t k;
  std::size_t repeat;
  double seconds;
  std::size_t violations;
};

struct BenchCell {
  Algorithm algorithm;
  std::size_t n;
  std::size_t k;
  double median_seconds;
  std::size_t violations;
  std::size_t batch;  // detection calls per timed sample
};

/// Least-squares slope of log(time) against log(k) at fixed N.
struct BenchSlope {
  Algorithm algorithm;
  std::size_t n;
  double slope;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchCell> cells;
  std::vector<BenchSlope> slopes;
  std::vector<std::string> notes;
  /// Every algorithm reported the same violation count in every (N, k) cell.
  bool consistent = true;

  const BenchCell* cell(Algorithm algo, std::size_t n, std::size_t k) const;
  const BenchSlope* slope(Algorithm algo, std::size_t n) const;

  /// Header: algorithm,ndim,N,k,repeat,seconds,violations
  std::string to_csv() const;
  std::string to_table() const;
};

double loglog_slope(std::span<const double> x, std::span<const double> y);

BenchReport bench(const BenchOptions& opts);

}  // namespace topo
