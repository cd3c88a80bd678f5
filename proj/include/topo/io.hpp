#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "topo/grid.hpp"

namespace topo {

/// Raised for malformed input; `offset()` is the byte position of the fault.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// SEGV container, little-endian:
//   "SEGV" | u16 version=1 | u8 kind | u8 ndim | u32 dims[ndim] | u16 num_classes |
//   f32 spacing[ndim] | payload
// Labels and masks store one u8 per site; likelihoods one f32 per (class, site),
// class-major.
enum class SegvKind : std::uint8_t { Labels = 0, Mask = 1, Likelihood = 2 };

inline constexpr std::uint16_t kSegvVersion = 1;

std::vector<std::uint8_t> encode_label_grid(const LabelGrid& g);
std::vector<std::uint8_t> encode_mask(const BinaryMask& m);
/// Values are narrowed to f32 on the way out.
std::vector<std::uint8_t> encode_likelihood_grid(const LikelihoodGrid& f);

/// Accepts SEGV labels, or a binary P5 PGM (2D) whose gray values are labels.
/// `pgm_classes` declares c for PGM input; defaults to maxval + 1.
LabelGrid decode_label_grid(std::span<const std::uint8_t> bytes,
                            std::optional<unsigned> pgm_classes = std::nullopt);
BinaryMask decode_mask(std::span<const std::uint8_t> bytes);
LikelihoodGrid decode_likelihood_grid(std::span<const std::uint8_t> bytes, bool normalized = false);

SegvKind segv_kind(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pgm(const LabelGrid& g);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

LabelGrid read_label_grid(const std::filesystem::path& path,
                          std::optional<unsigned> pgm_classes = std::nullopt);
void write_label_grid(const LabelGrid& g, const std::filesystem::path& path);
void write_pgm(const LabelGrid& g, const std::filesystem::path& path);

BinaryMask read_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& m, const std::filesystem::path& path);

LikelihoodGrid read_likelihood_grid(const std::filesystem::path& path, bool normalized = false);
void write_likelihood_grid(const LikelihoodGrid& f, const std::filesystem::path& path);

}  // namespace topo
