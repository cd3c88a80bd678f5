#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace topo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kMaxClasses = 256;

/// Set of class ids, used for the A and C sides of a forbidden pair.
using ClassSet = std::bitset<kMaxClasses>;

ClassSet make_class_set(std::initializer_list<unsigned> ids);
std::vector<unsigned> class_ids(const ClassSet& set);

/// Lattice coordinate. 2D grids are handled as 3D grids with a leading
/// extent of 1, so a 2D (row, col) lives in entries [1] and [2].
using Coord = std::array<std::ptrdiff_t, 3>;

/// Extents of a 2D or 3D lattice. Row-major, last axis fastest.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t ndim() const { return ndim_; }
  std::size_t size() const { return ext_[0] * ext_[1] * ext_[2]; }

  /// Extent along one of the ndim() public axes.
  std::size_t dim(std::size_t axis) const { return ext_[3 - ndim_ + axis]; }
  std::vector<std::size_t> dims() const;

  /// Padded 3-axis extents (leading 1 for 2D).
  const std::array<std::size_t, 3>& ext() const { return ext_; }

  std::size_t index(const Coord& c) const {
    return (static_cast<std::size_t>(c[0]) * ext_[1] + static_cast<std::size_t>(c[1])) * ext_[2] +
           static_cast<std::size_t>(c[2]);
  }
  Coord coord(std::size_t index) const;
  bool contains(const Coord& c) const {
    return c[0] >= 0 && c[1] >= 0 && c[2] >= 0 && static_cast<std::size_t>(c[0]) < ext_[0] &&
           static_cast<std::size_t>(c[1]) < ext_[1] && static_cast<std::size_t>(c[2]) < ext_[2];
  }

  std::string to_string() const;

  bool operator==(const Shape&) const = default;

 private:
  std::size_t ndim_ = 0;
  std::array<std::size_t, 3> ext_{0, 0, 0};
};

/// Per-axis physical site size. Unused leading axis is 1.0 for 2D.
class Spacing {
 public:
  Spacing() = default;
  Spacing(std::initializer_list<double> values);
  explicit Spacing(std::span<const double> values);

  /// Padded to 3 axes the same way Shape is.
  const std::array<double, 3>& padded() const { return s_; }
  std::vector<double> values(std::size_t ndim) const;

  bool operator==(const Spacing&) const = default;

 private:
  std::array<double, 3> s_{1.0, 1.0, 1.0};
};

class LabelGrid {
 public:
  LabelGrid() = default;
  LabelGrid(Shape shape, unsigned num_classes, std::vector<std::uint8_t> labels,
            Spacing spacing = {});

  static LabelGrid filled(Shape shape, unsigned num_classes, std::uint8_t label = 0);

  const Shape& shape() const { return shape_; }
  unsigned num_classes() const { return num_classes_; }
  const Spacing& spacing() const { return spacing_; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  std::uint8_t at(const Coord& c) const { return labels_[shape_.index(c)]; }

  /// Sites with a nonzero label.
  std::size_t foreground_count() const;

  bool operator==(const LabelGrid&) const = default;

 private:
  Shape shape_;
  unsigned num_classes_ = 0;
  Spacing spacing_;
  std::vector<std::uint8_t> labels_;
};

/// Per-class real values, class-major: value(k, i) = values[k * size + i].
class LikelihoodGrid {
 public:
  static constexpr double kNormTolerance = 1e-5;

  LikelihoodGrid() = default;
  /// `normalized` records the caller's claim that channels sum to one; the
  /// claim is checked.
  LikelihoodGrid(Shape shape, unsigned num_classes, std::vector<double> values,
                 bool normalized = false);

  const Shape& shape() const { return shape_; }
  unsigned num_classes() const { return num_classes_; }
  bool normalized() const { return normalized_; }
  std::span<const double> values() const { return values_; }
  double value(unsigned k, std::size_t site) const { return values_[k * shape_.size() + site]; }
  std::span<const double> channel(unsigned k) const {
    return std::span<const double>(values_).subspan(k * shape_.size(), shape_.size());
  }

  /// First site whose channel sum is off by more than kNormTolerance, or size().
  std::size_t first_unnormalized_site() const;

  bool operator==(const LikelihoodGrid& o) const {
    return shape_ == o.shape_ && num_classes_ == o.num_classes_ && values_ == o.values_;
  }

 private:
  Shape shape_;
  unsigned num_classes_ = 0;
  bool normalized_ = false;
  std::vector<double> values_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Shape shape);
  BinaryMask(Shape shape, std::vector<std::uint8_t> bits);

  const Shape& shape() const { return shape_; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::span<std::uint8_t> bits() { return bits_; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }

  std::size_t popcount() const;
  bool any() const;
  /// True when every set bit here is also set in `other`.
  bool subset_of(const BinaryMask& other) const;

  BinaryMask& operator|=(const BinaryMask& o);
  BinaryMask& operator&=(const BinaryMask& o);
  friend BinaryMask operator|(BinaryMask a, const BinaryMask& b) { return a |= b; }
  friend BinaryMask operator&(BinaryMask a, const BinaryMask& b) { return a &= b; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

/// Neighbor counts N_A / N_C produced by convolving a mask with a kernel.
class CountGrid {
 public:
  CountGrid() = default;
  explicit CountGrid(Shape shape) : shape_(shape), counts_(shape.size(), 0) {}
  CountGrid(Shape shape, std::vector<std::uint32_t> counts);

  const Shape& shape() const { return shape_; }
  std::span<const std::uint32_t> counts() const { return counts_; }
  std::span<std::uint32_t> counts() { return counts_; }

  bool operator==(const CountGrid&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint32_t> counts_;
};

BinaryMask class_mask(const LabelGrid& g, const ClassSet& ids);

/// Per-site argmax over channels, ties toward the lowest class index.
LabelGrid argmax_labels(const LikelihoodGrid& f, Spacing spacing = {});

LikelihoodGrid one_hot(const LabelGrid& g);

}  // namespace topo
