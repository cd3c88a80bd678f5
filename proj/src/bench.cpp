#include "topo/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "topo/synth.hpp"

namespace topo {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("slope fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw Error("slope fit needs distinct x values");
  return sxy / sxx;
}

const BenchCell* BenchReport::cell(Algorithm algo, std::size_t n, std::size_t k) const {
  for (const auto& c : cells)
    if (c.algorithm == algo && c.n == n && c.k == k) return &c;
  return nullptr;
}

const BenchSlope* BenchReport::slope(Algorithm algo, std::size_t n) const {
  for (const auto& s : slopes)
    if (s.algorithm == algo && s.n == n) return &s;
  return nullptr;
}

std::string BenchReport::to_csv() const {
  std::ostringstream os;
  os << "algorithm,ndim,N,k,repeat,seconds,violations\n";
  os << std::setprecision(9);
  for (const auto& r : rows)
    os << to_string(r.algorithm) << ',' << r.ndim << ',' << r.n << ',' << r.k << ',' << r.repeat << ',' << r.seconds
       << ',' << r.violations << '\n';
  return os.str();
}

std::string BenchReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(12) << "algorithm" << std::right << std::setw(7) << "N" << std::setw(5) << "k"
     << std::setw(14) << "median[s]" << std::setw(8) << "batch" << std::setw(12) << "violations" << '\n';
  for (const auto& c : cells)
    os << std::left << std::setw(12) << to_string(c.algorithm) << std::right << std::setw(7) << c.n << std::setw(5)
       << c.k << std::setw(14) << std::scientific << std::setprecision(3) << c.median_seconds << std::defaultfloat
       << std::setw(8) << c.batch << std::setw(12) << c.violations << '\n';
  for (const auto& s : slopes)
    os << "slope d(log t)/d(log k) " << to_string(s.algorithm) << " N=" << s.n << ": " << std::fixed
       << std::setprecision(3) << s.slope << std::defaultfloat << '\n';
  for (const auto& n : notes) os << "note: " << n << '\n';
  return os.str();
}

BenchReport bench(const BenchOptions& opts) {
  if (opts.algorithms.empty() || opts.sizes.empty() || opts.kernel_extents.empty())
    throw Error("bench needs at least one algorithm, size and kernel extent");
  if (opts.repeats < 1) throw Error("bench needs at least one repeat");
  for (std::size_t k : opts.kernel_extents)
    if (k < 3 || k % 2 == 0) throw Error("kernel extent must be odd and >= 3, got " + std::to_string(k));

  struct Case {
    std::size_t n, k;
    SynthResult input;
    std::vector<PairTask> tasks;
    std::vector<std::size_t> batches, expected;
    std::vector<std::vector<double>> samples;
    std::vector<BenchRow> rows;
  };

  BenchReport report;
  std::vector<Case> cases;
  for (std::size_t n : opts.sizes) {
    for (std::size_t k : opts.kernel_extents) {
      SynthSpec spec;
      spec.dims.assign(opts.ndim, n);
      spec.scenario = Scenario::NestedRings;
      spec.wall_thickness = static_cast<unsigned>((k - 1) / 2);
      spec.seed = opts.seed;
      std::size_t cells = 1;
      for (std::size_t a = 0; a < opts.ndim; ++a) cells *= n / cell_size(spec);
      spec.violation_count = std::min<std::size_t>(8, cells);
      Case c{n, k, generate(spec), {}, {}, {}, std::vector<std::vector<double>>(opts.algorithms.size()), {}};
      c.tasks = reduce(c.input.constraints, Connectivity::Box, opts.ndim);

      // Warm-up call per algorithm: plans, caches, page faults. Also sizes the batch.
      for (Algorithm algo : opts.algorithms) {
        const auto t0 = Clock::now();
        c.expected.push_back(run_detection(c.input.grid, c.tasks, algo, opts.threads).violation_count);
        const double warm = std::max(seconds_since(t0), 1e-9);
        std::size_t batch = 1;
        if (warm < opts.min_sample_seconds)
          batch = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(opts.min_sample_seconds / warm)), 100000);
        c.batches.push_back(batch);
      }
      cases.push_back(std::move(c));
    }
  }

  // Each repeat visits every (N, k, algorithm) cell once, so slow drift in
  // machine speed spreads over all cells alike.
  for (std::size_t rep = 0; rep < opts.repeats; ++rep) {
    for (auto& c : cases) {
      for (std::size_t a = 0; a < opts.algorithms.size(); ++a) {
        const Algorithm algo = opts.algorithms[a];
        std::size_t seen = 0;
        const auto t0 = Clock::now();
        for (std::size_t b = 0; b < c.batches[a]; ++b)
          seen = run_detection(c.input.grid, c.tasks, algo, opts.threads).violation_count;
        const double per_call = seconds_since(t0) / static_cast<double>(c.batches[a]);
        if (per_call <= 0.0) throw Error("timing below clock resolution even after batching");
        if (seen != c.expected[a]) report.consistent = false;
        c.samples[a].push_back(per_call);
        c.rows.push_back({algo, opts.ndim, c.n, c.k, rep, per_call, seen});
      }
    }
  }

  for (auto& c : cases) {
    std::stable_sort(c.rows.begin(), c.rows.end(), [&](const BenchRow& x, const BenchRow& y) {
      return std::find(opts.algorithms.begin(), opts.algorithms.end(), x.algorithm) <
             std::find(opts.algorithms.begin(), opts.algorithms.end(), y.algorithm);
    });
    report.rows.insert(report.rows.end(), c.rows.begin(), c.rows.end());
    for (std::size_t a = 0; a < opts.algorithms.size(); ++a) {
      const Algorithm algo = opts.algorithms[a];
      const std::string where = " N=" + std::to_string(c.n) + " k=" + std::to_string(c.k);
      if (c.batches[a] > 1)
        report.notes.push_back(to_string(algo) + where + " ran below the sample floor; timed in batches of " +
                               std::to_string(c.batches[a]));
      report.cells.push_back({algo, c.n, c.k, median(c.samples[a]), c.expected[a], c.batches[a]});
      if (c.expected[a] != c.expected[0]) {
        report.consistent = false;
        report.notes.push_back("violation count mismatch at" + where + ": " + to_string(algo) + " found " +
                               std::to_string(c.expected[a]) + ", expected " + std::to_string(c.expected[0]));
      }
    }
  }

  if (opts.kernel_extents.size() >= 2) {
    for (std::size_t n : opts.sizes) {
      for (Algorithm algo : opts.algorithms) {
        std::vector<double> ks, ts;
        for (std::size_t k : opts.kernel_extents) {
          ks.push_back(static_cast<double>(k));
          ts.push_back(report.cell(algo, n, k)->median_seconds);
        }
        report.slopes.push_back({algo, n, loglog_slope(ks, ts)});
      }
    }
  }
  return report;
}

}  // namespace topo
