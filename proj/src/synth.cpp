#include "topo/synth.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace topo {

Scenario parse_scenario(std::string_view name) {
  if (name == "nested_rings") return Scenario::NestedRings;
  if (name == "exclusion_blobs") return Scenario::ExclusionBlobs;
  throw Error("unknown scenario '" + std::string(name) + "' (expected nested_rings or exclusion_blobs)");
}

std::string to_string(Scenario s) { return s == Scenario::NestedRings ? "nested_rings" : "exclusion_blobs"; }

namespace {

constexpr std::size_t kMargin = 1;

std::size_t inner_size(unsigned wall) { return std::max<std::size_t>(2, wall); }

// Cell geometry along one axis.
//   rings: margin | wall | inner | wall | margin
//   blobs: blob (side inner) | gap (wall)
struct Layout {
  std::size_t cell;
  std::size_t wall;
  std::size_t inner;
};

Layout layout_for(const SynthSpec& spec) {
  const std::size_t t = spec.wall_thickness;
  const std::size_t a = inner_size(spec.wall_thickness);
  if (spec.scenario == Scenario::NestedRings) return {2 * kMargin + 2 * t + a, t, a};
  return {a + t, t, a};
}

}  // namespace

std::size_t cell_size(const SynthSpec& spec) { return layout_for(spec).cell; }

SynthResult generate(const SynthSpec& spec) {
  const Shape shape(spec.dims);
  if (spec.num_classes < 3 || spec.num_classes > kMaxClasses)
    throw Error("synthetic scenarios need between 3 and 256 classes");
  if (spec.wall_thickness < 1) throw Error("wall thickness must be >= 1");
  const Layout lay = layout_for(spec);
  const std::size_t ndim = shape.ndim();
  const auto& ext = shape.ext();

  // Cells along each padded axis; the unused 2D axis holds one "cell" of extent 1.
  std::array<std::size_t, 3> cells{1, 1, 1};
  for (std::size_t ax = 3 - ndim; ax < 3; ++ax) cells[ax] = ext[ax] / lay.cell;
  const std::size_t total_cells = cells[0] * cells[1] * cells[2];
  if (total_cells == 0)
    throw Error("grid " + shape.to_string() + " is too small for one " + to_string(spec.scenario) + " cell of side " +
                std::to_string(lay.cell));

  auto cell_origin = [&](std::size_t cell_index) {
    Coord c{};
    std::size_t rem = cell_index;
    for (int ax = 2; ax >= 0; --ax) {
      const auto a = static_cast<std::size_t>(ax);
      const std::size_t ci = rem % cells[a];
      rem /= cells[a];
      c[a] = static_cast<std::ptrdiff_t>(ci * lay.cell);
    }
    return c;
  };
  auto cell_coord = [&](std::size_t cell_index) {
    std::array<std::size_t, 3> c{};
    std::size_t rem = cell_index;
    for (int ax = 2; ax >= 0; --ax) {
      const auto a = static_cast<std::size_t>(ax);
      c[a] = rem % cells[a];
      rem /= cells[a];
    }
    return c;
  };
  auto local_range = [&](std::size_t a) { return (ndim == 2 && a == 0) ? std::size_t{1} : lay.cell; };

  std::vector<std::uint8_t> labels(shape.size(), 0);
  const unsigned fg = spec.num_classes - 1;

  for (std::size_t ci = 0; ci < total_cells; ++ci) {
    const Coord o = cell_origin(ci);
    const auto cc = cell_coord(ci);
    const std::size_t parity = cc[0] + cc[1] + cc[2];
    for (std::size_t u0 = 0; u0 < local_range(0); ++u0)
      for (std::size_t u1 = 0; u1 < local_range(1); ++u1)
        for (std::size_t u2 = 0; u2 < local_range(2); ++u2) {
          const std::array<std::size_t, 3> u{u0, u1, u2};
          std::uint8_t label = 0;
          if (spec.scenario == Scenario::NestedRings) {
            bool inside = true;
            std::size_t depth = SIZE_MAX;
            for (std::size_t a = 3 - ndim; a < 3; ++a) {
              if (u[a] < kMargin || u[a] >= lay.cell - kMargin) {
                inside = false;
                break;
              }
              depth = std::min({depth, u[a] - kMargin, lay.cell - 1 - kMargin - u[a]});
            }
            if (inside) label = depth < lay.wall ? 2 : 1;
            // Extra classes sit as single sites in the cell corner, clear of the wall.
            if (spec.num_classes > 3 && u0 == 0 && u1 == 0 && u2 == 0)
              label = static_cast<std::uint8_t>(3 + ci % (spec.num_classes - 3));
          } else {
            bool in_blob = true;
            for (std::size_t a = 3 - ndim; a < 3; ++a) in_blob = in_blob && u[a] < lay.inner;
            if (in_blob) label = static_cast<std::uint8_t>(1 + parity % fg);
          }
          const Coord p{o[0] + static_cast<std::ptrdiff_t>(u0), o[1] + static_cast<std::ptrdiff_t>(u1),
                        o[2] + static_cast<std::ptrdiff_t>(u2)};
          labels[shape.index(p)] = label;
        }
  }

  // Candidate cells for planting: blobs need a neighbor cell along the last axis.
  std::vector<std::size_t> candidates;
  for (std::size_t ci = 0; ci < total_cells; ++ci)
    if (spec.scenario == Scenario::NestedRings || cell_coord(ci)[2] + 1 < cells[2]) candidates.push_back(ci);
  if (spec.violation_count > candidates.size())
    throw Error("cannot plant " + std::to_string(spec.violation_count) + " violations in " +
                std::to_string(candidates.size()) + " eligible cells; enlarge the grid");

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> chosen;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen), spec.violation_count, rng);

  SynthResult out;
  for (std::size_t ci : chosen) {
    const Coord o = cell_origin(ci);
    // Random cross-section position within the inner region (rings) or blob.
    Coord p = o;
    const std::size_t lo = spec.scenario == Scenario::NestedRings ? kMargin + lay.wall : 0;
    std::uniform_int_distribution<std::size_t> pick(lo, lo + lay.inner - 1);
    for (std::size_t a = 3 - ndim; a < 2; ++a) p[a] += static_cast<std::ptrdiff_t>(pick(rng));
    if (spec.scenario == Scenario::NestedRings) {
      // Punch a straight hole through the far wall along the last axis.
      const std::size_t edge = kMargin + lay.wall + lay.inner;  // first wall site after the inner region
      for (std::size_t s = edge; s < edge + lay.wall; ++s) {
        Coord h = p;
        h[2] = o[2] + static_cast<std::ptrdiff_t>(s);
        labels[shape.index(h)] = 0;
      }
      p[2] = o[2] + static_cast<std::ptrdiff_t>(edge - 1);
    } else {
      // Bridge the gap to the next blob along the last axis with this blob's class.
      const std::uint8_t own = labels[shape.index(o)];
      for (std::size_t s = lay.inner; s < lay.cell; ++s) {
        Coord h = p;
        h[2] = o[2] + static_cast<std::ptrdiff_t>(s);
        labels[shape.index(h)] = own;
      }
      p[2] = o[2] + static_cast<std::ptrdiff_t>(lay.cell - 1);
    }
    out.planted.push_back(p);
  }

  std::vector<Constraint> constraints;
  if (spec.scenario == Scenario::NestedRings) {
    constraints.push_back(Constraint::containment(1, 2, spec.wall_thickness));
  } else {
    for (unsigned a = 1; a < spec.num_classes; ++a)
      for (unsigned b = a + 1; b < spec.num_classes; ++b)
        constraints.push_back(Constraint::exclusion(a, b, spec.wall_thickness));
  }
  out.grid = LabelGrid(shape, spec.num_classes, std::move(labels));
  out.constraints = ConstraintSet(spec.num_classes, std::move(constraints));
  return out;
}

}  // namespace topo
