#include "topo/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace topo {

FormatError::FormatError(const std::string& what, std::size_t offset)
    : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>(v >> s));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  void reserve(std::size_t n) { out_.reserve(n); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw FormatError(std::string("truncated ") + what, in_.size());
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return in_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | in_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

struct Header {
  SegvKind kind;
  Shape shape;
  unsigned num_classes;
  Spacing spacing;
};

void write_header(Writer& w, SegvKind kind, const Shape& shape, unsigned num_classes,
                  const Spacing& spacing) {
  w.bytes("SEGV", 4);
  w.u16(kSegvVersion);
  w.u8(static_cast<std::uint8_t>(kind));
  w.u8(static_cast<std::uint8_t>(shape.ndim()));
  for (std::size_t a = 0; a < shape.ndim(); ++a) {
    if (shape.dim(a) > UINT32_MAX) throw Error("grid extent does not fit in u32");
    w.u32(static_cast<std::uint32_t>(shape.dim(a)));
  }
  w.u16(static_cast<std::uint16_t>(num_classes));
  for (double s : spacing.values(shape.ndim())) w.f32(static_cast<float>(s));
}

Header read_header(Reader& r) {
  auto magic = r.take(4, "header");
  if (std::memcmp(magic.data(), "SEGV", 4) != 0) throw FormatError("bad magic, expected SEGV", 0);
  std::size_t at = r.pos();
  std::uint16_t version = r.u16("header");
  if (version != kSegvVersion)
    throw FormatError("unsupported SEGV version " + std::to_string(version), at);
  at = r.pos();
  std::uint8_t kind = r.u8("header");
  if (kind > 2) throw FormatError("unknown SEGV kind " + std::to_string(kind), at);
  at = r.pos();
  std::uint8_t ndim = r.u8("header");
  if (ndim != 2 && ndim != 3) throw FormatError("ndim must be 2 or 3, got " + std::to_string(ndim), at);
  std::vector<std::size_t> dims;
  for (unsigned a = 0; a < ndim; ++a) {
    at = r.pos();
    std::uint32_t d = r.u32("dims");
    if (d == 0) throw FormatError("zero grid extent", at);
    dims.push_back(d);
  }
  at = r.pos();
  unsigned classes = r.u16("header");
  if (classes < 1 || classes > kMaxClasses)
    throw FormatError("num_classes must be in 1..256, got " + std::to_string(classes), at);
  std::vector<double> spacing;
  for (unsigned a = 0; a < ndim; ++a) {
    at = r.pos();
    float s = r.f32("spacing");
    if (!(s > 0.0f) || !std::isfinite(s)) throw FormatError("spacing must be positive", at);
    spacing.push_back(s);
  }
  return Header{static_cast<SegvKind>(kind), Shape(dims), classes, Spacing(spacing)};
}

Header expect_kind(Reader& r, SegvKind want, const char* name) {
  Header h = read_header(r);
  if (h.kind != want) throw FormatError(std::string("SEGV file does not hold ") + name, 6);
  return h;
}

void expect_end(const Reader& r) {
  if (r.remaining() != 0) throw FormatError("trailing bytes after payload", r.pos());
}

std::size_t checked_bytes(const Shape& shape, std::size_t per_site) {
  return shape.size() * per_site;
}

// PGM tokens are separated by whitespace; '#' starts a comment to end of line.
std::size_t pgm_token(std::span<const std::uint8_t> in, std::size_t& pos) {
  while (pos < in.size()) {
    if (in[pos] == '#') {
      while (pos < in.size() && in[pos] != '\n') ++pos;
    } else if (std::isspace(in[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  if (pos >= in.size()) throw FormatError("truncated PGM header", pos);
  std::size_t value = 0;
  while (pos < in.size() && std::isdigit(in[pos])) {
    value = value * 10 + static_cast<std::size_t>(in[pos] - '0');
    if (value > (1u << 30)) throw FormatError("PGM header value too large", start);
    ++pos;
  }
  if (pos == start) throw FormatError("malformed PGM header", start);
  return value;
}

LabelGrid decode_pgm(std::span<const std::uint8_t> in, std::optional<unsigned> classes) {
  std::size_t pos = 2;
  std::size_t width = pgm_token(in, pos);
  std::size_t height = pgm_token(in, pos);
  std::size_t maxval_at = pos;
  std::size_t maxval = pgm_token(in, pos);
  if (width == 0 || height == 0) throw FormatError("zero PGM extent", maxval_at);
  if (maxval == 0 || maxval > 255) throw FormatError("PGM maxval must be in 1..255", maxval_at);
  if (pos >= in.size() || !std::isspace(in[pos])) throw FormatError("malformed PGM header", pos);
  ++pos;
  unsigned c = classes.value_or(static_cast<unsigned>(maxval) + 1);
  if (c < 1 || c > kMaxClasses) throw FormatError("declared class count out of range", 0);
  std::size_t n = width * height;
  if (in.size() - pos < n) throw FormatError("truncated PGM payload", in.size());
  if (in.size() - pos > n) throw FormatError("trailing bytes after payload", pos + n);
  std::vector<std::uint8_t> labels(in.begin() + static_cast<std::ptrdiff_t>(pos),
                                   in.begin() + static_cast<std::ptrdiff_t>(pos + n));
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] >= c) throw FormatError("label out of range", pos + i);
  return LabelGrid(Shape{height, width}, c, std::move(labels), Spacing{1.0, 1.0});
}

}  // namespace

std::vector<std::uint8_t> encode_label_grid(const LabelGrid& g) {
  Writer w;
  w.reserve(64 + g.shape().size());
  write_header(w, SegvKind::Labels, g.shape(), g.num_classes(), g.spacing());
  w.bytes(g.labels().data(), g.labels().size());
  return w.take();
}

std::vector<std::uint8_t> encode_mask(const BinaryMask& m) {
  Writer w;
  w.reserve(64 + m.shape().size());
  write_header(w, SegvKind::Mask, m.shape(), 2, Spacing{});
  w.bytes(m.bits().data(), m.bits().size());
  return w.take();
}

std::vector<std::uint8_t> encode_likelihood_grid(const LikelihoodGrid& f) {
  Writer w;
  w.reserve(64 + 4 * f.values().size());
  write_header(w, SegvKind::Likelihood, f.shape(), f.num_classes(), Spacing{});
  for (double v : f.values()) {
    float x = static_cast<float>(v);
    if (!std::isfinite(x)) throw Error("likelihood value does not fit in f32");
    w.f32(x);
  }
  return w.take();
}

SegvKind segv_kind(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  return read_header(r).kind;
}

LabelGrid decode_label_grid(std::span<const std::uint8_t> bytes, std::optional<unsigned> pgm_classes) {
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes, pgm_classes);
  Reader r(bytes);
  Header h = expect_kind(r, SegvKind::Labels, "labels");
  std::size_t start = r.pos();
  auto payload = r.take(checked_bytes(h.shape, 1), "payload");
  expect_end(r);
  for (std::size_t i = 0; i < payload.size(); ++i)
    if (payload[i] >= h.num_classes) throw FormatError("label out of range", start + i);
  return LabelGrid(h.shape, h.num_classes, std::vector<std::uint8_t>(payload.begin(), payload.end()),
                   h.spacing);
}

BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Header h = expect_kind(r, SegvKind::Mask, "a mask");
  std::size_t start = r.pos();
  auto payload = r.take(checked_bytes(h.shape, 1), "payload");
  expect_end(r);
  for (std::size_t i = 0; i < payload.size(); ++i)
    if (payload[i] > 1) throw FormatError("mask bit is not 0 or 1", start + i);
  return BinaryMask(h.shape, std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

LikelihoodGrid decode_likelihood_grid(std::span<const std::uint8_t> bytes, bool normalized) {
  Reader r(bytes);
  Header h = expect_kind(r, SegvKind::Likelihood, "a likelihood grid");
  std::size_t count = h.shape.size() * h.num_classes;
  r.need(count * 4, "payload");
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t at = r.pos();
    float v = r.f32("payload");
    if (!std::isfinite(v)) throw FormatError("non-finite likelihood value", at);
    values[i] = v;
  }
  expect_end(r);
  return LikelihoodGrid(h.shape, h.num_classes, std::move(values), normalized);
}

std::vector<std::uint8_t> encode_pgm(const LabelGrid& g) {
  if (g.shape().ndim() != 2) throw Error("PGM output supports 2D grids only");
  std::string header = "P5\n" + std::to_string(g.shape().dim(1)) + " " +
                       std::to_string(g.shape().dim(0)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), g.labels().begin(), g.labels().end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

LabelGrid read_label_grid(const std::filesystem::path& path, std::optional<unsigned> pgm_classes) {
  return decode_label_grid(read_file(path), pgm_classes);
}

void write_label_grid(const LabelGrid& g, const std::filesystem::path& path) {
  write_file(path, encode_label_grid(g));
}

void write_pgm(const LabelGrid& g, const std::filesystem::path& path) { write_file(path, encode_pgm(g)); }

BinaryMask read_mask(const std::filesystem::path& path) { return decode_mask(read_file(path)); }

void write_mask(const BinaryMask& m, const std::filesystem::path& path) { write_file(path, encode_mask(m)); }

LikelihoodGrid read_likelihood_grid(const std::filesystem::path& path, bool normalized) {
  return decode_likelihood_grid(read_file(path), normalized);
}

void write_likelihood_grid(const LikelihoodGrid& f, const std::filesystem::path& path) {
  write_file(path, encode_likelihood_grid(f));
}

}  // namespace topo
