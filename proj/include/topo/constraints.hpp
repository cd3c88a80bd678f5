#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topo/grid.hpp"

namespace topo {

enum class ConstraintKind { Containment, Exclusion };

/// One topological interaction between two classes.
///
/// Containment: `first` must be completely surrounded by `second`, with a wall
/// at least `width` sites thick. Exclusion: `first` and `second` must never
/// come within `width` sites of each other.
struct Constraint {
  ConstraintKind kind = ConstraintKind::Exclusion;
  unsigned first = 0;
  unsigned second = 0;
  unsigned width = 1;

  static Constraint containment(unsigned inner, unsigned outer, unsigned width = 1) {
    return {ConstraintKind::Containment, inner, outer, width};
  }
  static Constraint exclusion(unsigned a, unsigned b, unsigned width = 1) {
    return {ConstraintKind::Exclusion, a, b, width};
  }

  bool operator==(const Constraint&) const = default;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(unsigned num_classes, std::vector<Constraint> constraints);

  unsigned num_classes() const { return num_classes_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  bool empty() const { return constraints_.empty(); }

  bool operator==(const ConstraintSet&) const = default;

 private:
  unsigned num_classes_ = 0;
  std::vector<Constraint> constraints_;
};

enum class Connectivity { Four, Eight, Six, TwentySix, Box };

Connectivity parse_connectivity(std::string_view name);
std::string to_string(Connectivity conn);
/// 8 in 2D, 26 in 3D.
Connectivity full_connectivity(std::size_t ndim);

/// 0/1 stencil of odd extent per axis, stored padded to 3 axes like Shape.
class ConnectivityKernel {
 public:
  ConnectivityKernel() = default;
  ConnectivityKernel(std::size_t ndim, std::size_t extent, std::vector<std::uint8_t> weights);

  std::size_t ndim() const { return ndim_; }
  std::size_t extent() const { return extent_; }
  std::ptrdiff_t radius() const { return static_cast<std::ptrdiff_t>(extent_ / 2); }
  std::span<const std::uint8_t> weights() const { return weights_; }

  /// Weight at an offset from the center, in padded 3-axis coordinates.
  bool weight(const Coord& offset) const;
  /// Nonzero offsets, excluding the center.
  std::vector<Coord> neighbor_offsets() const;
  /// Nonzero offsets including the center when its weight is set.
  std::vector<Coord> support() const;
  std::size_t popcount() const;

  bool center() const;
  ConnectivityKernel with_center(bool on) const;

  bool operator==(const ConnectivityKernel&) const = default;

 private:
  std::size_t flat(const Coord& offset) const;

  std::size_t ndim_ = 0;
  std::size_t extent_ = 0;
  std::vector<std::uint8_t> weights_;
};

/// Named connectivities need width 1; Box uses a (2*width+1)^ndim all-ones kernel.
ConnectivityKernel build_kernel(std::size_t ndim, Connectivity conn, unsigned width = 1);

/// Forbidden label pair: no site in ids_a may have a kernel neighbor in ids_c.
struct PairTask {
  ClassSet ids_a;
  ClassSet ids_c;
  unsigned width = 1;
  ConnectivityKernel kernel;
};

/// Lowers every constraint to a forbidden-pair task. Width > 1 always uses the
/// box kernel regardless of `conn`.
std::vector<PairTask> reduce(const ConstraintSet& cs, Connectivity conn, std::size_t ndim);

struct ConstraintConfig {
  ConstraintSet constraints;
  Connectivity conn = Connectivity::Box;
};

/// Plain-text config, one directive per line:
///   classes <c> | contain <a> in <b> [d=<n>] | exclude <a> <b> [d=<n>] |
///   conn <4|8|6|26|box> | # comment
ConstraintConfig parse_constraint_config(std::string_view text);
ConstraintConfig read_constraint_config(const std::filesystem::path& path);
std::string format_constraint_config(const ConstraintConfig& cfg);

}  // namespace topo
