#include "topo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace topo {

ClassSet make_class_set(std::initializer_list<unsigned> ids) {
  ClassSet s;
  for (unsigned id : ids) {
    if (id >= kMaxClasses) throw Error("class id " + std::to_string(id) + " exceeds 255");
    s.set(id);
  }
  return s;
}

std::vector<unsigned> class_ids(const ClassSet& set) {
  std::vector<unsigned> out;
  for (unsigned i = 0; i < kMaxClasses; ++i)
    if (set.test(i)) out.push_back(i);
  return out;
}

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() != 2 && dims.size() != 3)
    throw Error("grid must be 2D or 3D, got " + std::to_string(dims.size()) + " axes");
  ndim_ = dims.size();
  ext_ = {1, 1, 1};
  for (std::size_t a = 0; a < ndim_; ++a) {
    if (dims[a] == 0) throw Error("grid extent must be >= 1 on every axis");
    ext_[3 - ndim_ + a] = dims[a];
  }
}

std::vector<std::size_t> Shape::dims() const {
  return std::vector<std::size_t>(ext_.begin() + static_cast<std::ptrdiff_t>(3 - ndim_), ext_.end());
}

Coord Shape::coord(std::size_t index) const {
  Coord c;
  c[2] = static_cast<std::ptrdiff_t>(index % ext_[2]);
  index /= ext_[2];
  c[1] = static_cast<std::ptrdiff_t>(index % ext_[1]);
  c[0] = static_cast<std::ptrdiff_t>(index / ext_[1]);
  return c;
}

std::string Shape::to_string() const {
  std::ostringstream os;
  for (std::size_t a = 0; a < ndim_; ++a) os << (a ? "x" : "") << dim(a);
  return os.str();
}

Spacing::Spacing(std::initializer_list<double> values)
    : Spacing(std::span<const double>(values.begin(), values.size())) {}

Spacing::Spacing(std::span<const double> values) {
  if (values.size() > 3) throw Error("spacing has more than 3 axes");
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (!(values[a] > 0.0) || !std::isfinite(values[a]))
      throw Error("spacing entries must be finite and strictly positive");
    s_[3 - values.size() + a] = values[a];
  }
}

std::vector<double> Spacing::values(std::size_t ndim) const {
  return std::vector<double>(s_.begin() + static_cast<std::ptrdiff_t>(3 - ndim), s_.end());
}

LabelGrid::LabelGrid(Shape shape, unsigned num_classes, std::vector<std::uint8_t> labels,
                     Spacing spacing)
    : shape_(shape), num_classes_(num_classes), spacing_(spacing), labels_(std::move(labels)) {
  if (shape_.ndim() == 0) throw Error("label grid needs a shape");
  if (num_classes_ < 1 || num_classes_ > kMaxClasses)
    throw Error("num_classes must be in 1..256, got " + std::to_string(num_classes_));
  if (labels_.size() != shape_.size())
    throw Error("label count " + std::to_string(labels_.size()) + " does not match dims " +
                shape_.to_string());
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] >= num_classes_)
      throw Error("label " + std::to_string(labels_[i]) + " at site " + std::to_string(i) +
                  " is out of range for " + std::to_string(num_classes_) + " classes");
}

LabelGrid LabelGrid::filled(Shape shape, unsigned num_classes, std::uint8_t label) {
  return LabelGrid(shape, num_classes, std::vector<std::uint8_t>(shape.size(), label));
}

std::size_t LabelGrid::foreground_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](std::uint8_t l) { return l != 0; }));
}

LikelihoodGrid::LikelihoodGrid(Shape shape, unsigned num_classes, std::vector<double> values,
                               bool normalized)
    : shape_(shape), num_classes_(num_classes), normalized_(normalized), values_(std::move(values)) {
  if (shape_.ndim() == 0) throw Error("likelihood grid needs a shape");
  if (num_classes_ < 1 || num_classes_ > kMaxClasses)
    throw Error("num_classes must be in 1..256, got " + std::to_string(num_classes_));
  if (values_.size() != shape_.size() * num_classes_)
    throw Error("likelihood value count " + std::to_string(values_.size()) +
                " does not match classes x dims");
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!std::isfinite(values_[i]))
      throw Error("likelihood value at index " + std::to_string(i) + " is not finite");
  if (normalized_) {
    std::size_t bad = first_unnormalized_site();
    if (bad != shape_.size())
      throw Error("likelihood flagged normalized but channels at site " + std::to_string(bad) +
                  " do not sum to 1");
  }
}

std::size_t LikelihoodGrid::first_unnormalized_site() const {
  const std::size_t n = shape_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (unsigned k = 0; k < num_classes_; ++k) sum += values_[k * n + i];
    if (std::abs(sum - 1.0) > kNormTolerance) return i;
  }
  return n;
}

BinaryMask::BinaryMask(Shape shape) : shape_(shape), bits_(shape.size(), 0) {}

BinaryMask::BinaryMask(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(shape), bits_(std::move(bits)) {
  if (bits_.size() != shape_.size()) throw Error("mask size does not match dims " + shape_.to_string());
  for (auto& b : bits_)
    if (b > 1) throw Error("mask bits must be 0 or 1");
}

std::size_t BinaryMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::any() const {
  return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

bool BinaryMask::subset_of(const BinaryMask& other) const {
  if (!(shape_ == other.shape_)) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i] && !other.bits_[i]) return false;
  return true;
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& o) {
  if (!(shape_ == o.shape_)) throw Error("mask shape mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
  return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& o) {
  if (!(shape_ == o.shape_)) throw Error("mask shape mismatch");
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= o.bits_[i];
  return *this;
}

CountGrid::CountGrid(Shape shape, std::vector<std::uint32_t> counts)
    : shape_(shape), counts_(std::move(counts)) {
  if (counts_.size() != shape_.size()) throw Error("count grid size does not match dims");
}

BinaryMask class_mask(const LabelGrid& g, const ClassSet& ids) {
  for (unsigned id = g.num_classes(); id < kMaxClasses; ++id)
    if (ids.test(id))
      throw Error("class id " + std::to_string(id) + " is out of range for " +
                  std::to_string(g.num_classes()) + " classes");
  std::array<std::uint8_t, kMaxClasses> lut{};
  for (unsigned id = 0; id < kMaxClasses; ++id) lut[id] = ids.test(id) ? 1 : 0;
  std::vector<std::uint8_t> bits(g.shape().size());
  auto labels = g.labels();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = lut[labels[i]];
  return BinaryMask(g.shape(), std::move(bits));
}

LabelGrid argmax_labels(const LikelihoodGrid& f, Spacing spacing) {
  const std::size_t n = f.shape().size();
  std::vector<std::uint8_t> labels(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = f.value(0, i);
    for (unsigned k = 1; k < f.num_classes(); ++k) {
      double v = f.value(k, i);
      if (v > best) {
        best = v;
        labels[i] = static_cast<std::uint8_t>(k);
      }
    }
  }
  return LabelGrid(f.shape(), f.num_classes(), std::move(labels), spacing);
}

LikelihoodGrid one_hot(const LabelGrid& g) {
  const std::size_t n = g.shape().size();
  std::vector<double> values(n * g.num_classes(), 0.0);
  for (std::size_t i = 0; i < n; ++i) values[g[i] * n + i] = 1.0;
  return LikelihoodGrid(g.shape(), g.num_classes(), std::move(values), true);
}

}  // namespace topo
