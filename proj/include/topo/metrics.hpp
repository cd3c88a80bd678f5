#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/detect.hpp"
#include "topo/grid.hpp"

namespace topo {

/// Raised when a surface metric is asked for a class with no sites.
class UndefinedMetric : public Error {
 public:
  UndefinedMetric() : Error("undefined metric for empty class") {}
};

/// 2|P and G| / (|P| + |G|); 1.0 when both are empty.
double dice(const BinaryMask& pred, const BinaryMask& gt);

/// Foreground sites with a background or out-of-grid neighbor under `conn`
/// (face connectivity when omitted).
std::vector<Coord> surface_sites(const BinaryMask& m, std::optional<Connectivity> conn = std::nullopt);

/// Squared distance, in physical units, from every site to the nearest set
/// site of `targets`. Infinity everywhere when `targets` is empty.
std::vector<double> squared_distance_transform(const BinaryMask& targets, const Spacing& spacing);

struct SurfaceDistances {
  double hausdorff = 0.0;
  double assd = 0.0;
};

/// Both surface metrics from one pair of distance transforms.
SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing);
double hausdorff(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing = {});
double assd(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing = {});

/// 100 * |V| / (sites with label != 0), or 0 when there is no foreground.
double violations_percent(const LabelGrid& g, const ConstraintSet& cs, Connectivity conn,
                          Algorithm algo = Algorithm::Auto);

struct ClassMetrics {
  double dice = 0.0;
  std::optional<double> hd;
  std::optional<double> assd;
  std::string error;  // set when hd/assd are undefined
};

struct MetricsReport {
  std::map<unsigned, ClassMetrics> per_class;
  double violations_percent = 0.0;

  /// Flat object with keys dice.<id>, hd.<id>, assd.<id>, violations_percent.
  /// Undefined distances are null.
  std::string to_json(int indent = -1) const;
};

MetricsReport evaluate(const LabelGrid& pred, const LabelGrid& gt, const ConstraintSet& cs, Connectivity conn,
                       Algorithm algo = Algorithm::Auto);

}  // namespace topo
