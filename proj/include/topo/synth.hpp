#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/grid.hpp"

namespace topo {

enum class Scenario {
  NestedRings,     // class 1 walled in by class 2, Containment(1 in 2)
  ExclusionBlobs,  // blobs of classes 1..c-1 separated by background, pairwise Exclusion
};

Scenario parse_scenario(std::string_view name);
std::string to_string(Scenario s);

struct SynthSpec {
  std::vector<std::size_t> dims{64, 64};
  unsigned num_classes = 3;
  Scenario scenario = Scenario::NestedRings;
  std::size_t violation_count = 0;
  /// Wall thickness for rings, background gap for blobs. Constraints are
  /// emitted with width equal to this value, so a clean grid satisfies them.
  unsigned wall_thickness = 1;
  std::uint64_t seed = 0;
};

struct SynthResult {
  LabelGrid grid;
  ConstraintSet constraints;
  /// One site per planted breach, each guaranteed to be flagged.
  std::vector<Coord> planted;
};

/// Tiles the grid with cells of the chosen scenario and plants exactly
/// `violation_count` breaches (wall holes or blob bridges) in distinct cells.
SynthResult generate(const SynthSpec& spec);

/// Side length of one scenario cell along every axis.
std::size_t cell_size(const SynthSpec& spec);

}  // namespace topo
