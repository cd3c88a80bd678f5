#include "topo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace topo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!(a.shape() == b.shape()))
    throw Error("mask dims differ: " + a.shape().to_string() + " vs " + b.shape().to_string());
}

// Lower envelope of parabolas w*(x - q)^2 + f(q) along one line (Felzenszwalb &
// Huttenlocher). Sites with f = inf are skipped.
void envelope_1d(std::span<double> line, double w, std::vector<std::size_t>& v, std::vector<double>& z,
                 std::vector<double>& out) {
  const std::size_t n = line.size();
  v.clear();
  z.clear();
  for (std::size_t q = 0; q < n; ++q) {
    if (line[q] == kInf) continue;
    const double fq = line[q] + w * static_cast<double>(q) * static_cast<double>(q);
    while (!v.empty()) {
      const std::size_t p = v.back();
      const double fp = line[p] + w * static_cast<double>(p) * static_cast<double>(p);
      const double s = (fq - fp) / (2.0 * w * static_cast<double>(q - p));
      if (s <= z.back()) {
        v.pop_back();
        z.pop_back();
      } else {
        v.push_back(q);
        z.push_back(s);
        break;
      }
    }
    if (v.empty()) {
      v.push_back(q);
      z.push_back(-kInf);
    }
  }
  if (v.empty()) return;  // no finite sites, line stays inf
  out.resize(n);
  std::size_t j = 0;
  for (std::size_t x = 0; x < n; ++x) {
    while (j + 1 < v.size() && z[j + 1] < static_cast<double>(x)) ++j;
    const double d = static_cast<double>(x) - static_cast<double>(v[j]);
    out[x] = w * d * d + line[v[j]];
  }
  std::copy(out.begin(), out.end(), line.begin());
}

std::vector<std::uint8_t> surface_indicator(const BinaryMask& m, const std::vector<Coord>& sites) {
  std::vector<std::uint8_t> bits(m.shape().size(), 0);
  for (const auto& c : sites) bits[m.shape().index(c)] = 1;
  return bits;
}

}  // namespace

double dice(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt);
  std::size_t p = 0, g = 0, both = 0;
  for (std::size_t i = 0; i < pred.bits().size(); ++i) {
    p += pred[i];
    g += gt[i];
    both += pred[i] && gt[i];
  }
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(p + g);
}

std::vector<Coord> surface_sites(const BinaryMask& m, std::optional<Connectivity> conn) {
  const Shape& shape = m.shape();
  const auto kernel = build_kernel(shape.ndim(), conn.value_or(shape.ndim() == 2 ? Connectivity::Four
                                                                                  : Connectivity::Six));
  const auto offsets = kernel.neighbor_offsets();
  std::vector<Coord> out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (!m[i]) continue;
    const Coord p = shape.coord(i);
    for (const auto& o : offsets) {
      const Coord q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      if (!shape.contains(q) || !m[shape.index(q)]) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::vector<double> squared_distance_transform(const BinaryMask& targets, const Spacing& spacing) {
  const Shape& shape = targets.shape();
  const auto& ext = shape.ext();
  const auto& sp = spacing.padded();
  std::vector<double> dist(shape.size());
  for (std::size_t i = 0; i < dist.size(); ++i) dist[i] = targets[i] ? 0.0 : kInf;

  std::vector<std::size_t> v;
  std::vector<double> z, out, line;
  const std::array<std::size_t, 3> stride{ext[1] * ext[2], ext[2], 1};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const std::size_t len = ext[axis];
    if (len == 1) continue;
    const double w = sp[axis] * sp[axis];
    line.resize(len);
    // Walk every line parallel to `axis`.
    for (std::size_t base = 0; base < dist.size(); ++base) {
      if ((base / stride[axis]) % len != 0) continue;
      for (std::size_t t = 0; t < len; ++t) line[t] = dist[base + t * stride[axis]];
      envelope_1d(line, w, v, z, out);
      for (std::size_t t = 0; t < len; ++t) dist[base + t * stride[axis]] = line[t];
    }
  }
  return dist;
}

SurfaceDistances surface_distances(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing) {
  require_same_shape(pred, gt);
  const auto ps = surface_sites(pred);
  const auto gs = surface_sites(gt);
  if (ps.empty() || gs.empty()) throw UndefinedMetric();

  const Shape& shape = pred.shape();
  const auto to_gt = squared_distance_transform(BinaryMask(shape, surface_indicator(gt, gs)), spacing);
  const auto to_pred = squared_distance_transform(BinaryMask(shape, surface_indicator(pred, ps)), spacing);

  double worst = 0.0, total = 0.0;
  for (const auto& p : ps) {
    const double d = std::sqrt(to_gt[shape.index(p)]);
    worst = std::max(worst, d);
    total += d;
  }
  for (const auto& g : gs) {
    const double d = std::sqrt(to_pred[shape.index(g)]);
    worst = std::max(worst, d);
    total += d;
  }
  return {worst, total / static_cast<double>(ps.size() + gs.size())};
}

double hausdorff(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing) {
  return surface_distances(pred, gt, spacing).hausdorff;
}

double assd(const BinaryMask& pred, const BinaryMask& gt, const Spacing& spacing) {
  return surface_distances(pred, gt, spacing).assd;
}

double violations_percent(const LabelGrid& g, const ConstraintSet& cs, Connectivity conn, Algorithm algo) {
  return detect(g, cs, conn, algo).violations_percent();
}

std::string MetricsReport::to_json(int indent) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [id, m] : per_class) {
    const std::string k = std::to_string(id);
    j["dice." + k] = m.dice;
    j["hd." + k] = m.hd ? nlohmann::ordered_json(*m.hd) : nlohmann::ordered_json(nullptr);
    j["assd." + k] = m.assd ? nlohmann::ordered_json(*m.assd) : nlohmann::ordered_json(nullptr);
  }
  j["violations_percent"] = violations_percent;
  return j.dump(indent);
}

MetricsReport evaluate(const LabelGrid& pred, const LabelGrid& gt, const ConstraintSet& cs, Connectivity conn,
                       Algorithm algo) {
  if (!(pred.shape() == gt.shape()))
    throw Error("prediction dims " + pred.shape().to_string() + " do not match ground truth " +
                gt.shape().to_string());
  if (pred.num_classes() != gt.num_classes()) throw Error("prediction and ground truth class counts differ");
  if (!(pred.spacing() == gt.spacing())) throw Error("prediction and ground truth spacing differ");

  MetricsReport report;
  for (unsigned id = 1; id < gt.num_classes(); ++id) {
    ClassSet ids;
    ids.set(id);
    const BinaryMask p = class_mask(pred, ids);
    const BinaryMask g = class_mask(gt, ids);
    ClassMetrics m;
    m.dice = dice(p, g);
    try {
      const auto d = surface_distances(p, g, gt.spacing());
      m.hd = d.hausdorff;
      m.assd = d.assd;
    } catch (const UndefinedMetric& e) {
      m.error = e.what();
    }
    report.per_class.emplace(id, std::move(m));
  }
  report.violations_percent = violations_percent(pred, cs, conn, algo);
  return report;
}

}  // namespace topo
