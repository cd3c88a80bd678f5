#include "topo/constraints.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace topo {

namespace {

std::string describe(const Constraint& c) {
  std::string s = c.kind == ConstraintKind::Containment
                      ? "contain " + std::to_string(c.first) + " in " + std::to_string(c.second)
                      : "exclude " + std::to_string(c.first) + " " + std::to_string(c.second);
  if (c.width != 1) s += " d=" + std::to_string(c.width);
  return s;
}

std::pair<unsigned, unsigned> unordered(unsigned a, unsigned b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

ConstraintSet::ConstraintSet(unsigned num_classes, std::vector<Constraint> constraints)
    : num_classes_(num_classes), constraints_(std::move(constraints)) {
  if (num_classes_ < 1 || num_classes_ > kMaxClasses)
    throw Error("num_classes must be in 1..256, got " + std::to_string(num_classes_));

  // Pairs that some containment declares as allowed to touch.
  std::map<std::pair<unsigned, unsigned>, const Constraint*> touching;
  std::map<unsigned, const Constraint*> outer_of;
  for (const auto& c : constraints_) {
    if (c.first >= num_classes_ || c.second >= num_classes_)
      throw Error("constraint '" + describe(c) + "' references a class >= " + std::to_string(num_classes_));
    if (c.first == c.second) throw Error("constraint '" + describe(c) + "' names the same class twice");
    if (c.width < 1) throw Error("constraint '" + describe(c) + "' needs width >= 1");
    if (c.kind != ConstraintKind::Containment) continue;
    if (auto it = outer_of.find(c.first); it != outer_of.end() && it->second->second != c.second)
      throw Error("contradictory constraints '" + describe(*it->second) + "' and '" + describe(c) +
                  "': a class cannot be contained by two different classes");
    if (auto it = touching.find(unordered(c.first, c.second));
        it != touching.end() && it->second->first != c.first)
      throw Error("contradictory constraints '" + describe(*it->second) + "' and '" + describe(c) +
                  "': cyclic containment");
    outer_of[c.first] = &c;
    touching[unordered(c.first, c.second)] = &c;
    if (num_classes_ < 3)
      throw Error("containment '" + describe(c) + "' leaves no forbidden neighbor class");
  }
  for (const auto& c : constraints_) {
    if (c.kind != ConstraintKind::Exclusion) continue;
    if (auto it = touching.find(unordered(c.first, c.second)); it != touching.end())
      throw Error("contradictory constraints '" + describe(*it->second) + "' and '" + describe(c) + "'");
  }
}

Connectivity parse_connectivity(std::string_view name) {
  if (name == "4") return Connectivity::Four;
  if (name == "8") return Connectivity::Eight;
  if (name == "6") return Connectivity::Six;
  if (name == "26") return Connectivity::TwentySix;
  if (name == "box") return Connectivity::Box;
  throw Error("unknown connectivity '" + std::string(name) + "' (expected 4, 8, 6, 26 or box)");
}

std::string to_string(Connectivity conn) {
  switch (conn) {
    case Connectivity::Four: return "4";
    case Connectivity::Eight: return "8";
    case Connectivity::Six: return "6";
    case Connectivity::TwentySix: return "26";
    case Connectivity::Box: return "box";
  }
  return "?";
}

Connectivity full_connectivity(std::size_t ndim) {
  return ndim == 2 ? Connectivity::Eight : Connectivity::TwentySix;
}

ConnectivityKernel::ConnectivityKernel(std::size_t ndim, std::size_t extent, std::vector<std::uint8_t> weights)
    : ndim_(ndim), extent_(extent), weights_(std::move(weights)) {
  if (ndim_ != 2 && ndim_ != 3) throw Error("kernel must be 2D or 3D");
  if (extent_ % 2 == 0) throw Error("kernel extent must be odd");
  std::size_t expect = ndim_ == 2 ? extent_ * extent_ : extent_ * extent_ * extent_;
  if (weights_.size() != expect) throw Error("kernel weight count does not match extent");
  for (auto w : weights_)
    if (w > 1) throw Error("kernel weights must be 0 or 1");
  if (neighbor_offsets().empty()) throw Error("kernel needs at least one off-center neighbor");
  for (const auto& o : support())
    if (!weight({-o[0], -o[1], -o[2]})) throw Error("kernel is not reflection-symmetric");
}

std::size_t ConnectivityKernel::flat(const Coord& o) const {
  const auto r = radius();
  const auto k = static_cast<std::ptrdiff_t>(extent_);
  std::ptrdiff_t z = ndim_ == 3 ? o[0] + r : 0;
  return static_cast<std::size_t>((z * k + (o[1] + r)) * k + (o[2] + r));
}

bool ConnectivityKernel::weight(const Coord& o) const {
  const auto r = radius();
  if (ndim_ == 2 && o[0] != 0) return false;
  for (auto v : o)
    if (v < -r || v > r) return false;
  return weights_[flat(o)] != 0;
}

std::vector<Coord> ConnectivityKernel::support() const {
  std::vector<Coord> out;
  const auto r = radius();
  const std::ptrdiff_t rz = ndim_ == 3 ? r : 0;
  for (std::ptrdiff_t z = -rz; z <= rz; ++z)
    for (std::ptrdiff_t y = -r; y <= r; ++y)
      for (std::ptrdiff_t x = -r; x <= r; ++x)
        if (weights_[flat({z, y, x})]) out.push_back({z, y, x});
  return out;
}

std::vector<Coord> ConnectivityKernel::neighbor_offsets() const {
  auto out = support();
  std::erase(out, Coord{0, 0, 0});
  return out;
}

std::size_t ConnectivityKernel::popcount() const {
  return static_cast<std::size_t>(std::count(weights_.begin(), weights_.end(), std::uint8_t{1}));
}

bool ConnectivityKernel::center() const { return weights_[flat({0, 0, 0})] != 0; }

ConnectivityKernel ConnectivityKernel::with_center(bool on) const {
  ConnectivityKernel k = *this;
  k.weights_[flat({0, 0, 0})] = on ? 1 : 0;
  return k;
}

ConnectivityKernel build_kernel(std::size_t ndim, Connectivity conn, unsigned width) {
  if (ndim != 2 && ndim != 3) throw Error("kernel must be 2D or 3D");
  if (width < 1) throw Error("kernel width must be >= 1");
  const bool is2d = ndim == 2;
  switch (conn) {
    case Connectivity::Four:
    case Connectivity::Eight:
      if (!is2d) throw Error("connectivity " + to_string(conn) + " requires a 2D grid");
      break;
    case Connectivity::Six:
    case Connectivity::TwentySix:
      if (is2d) throw Error("connectivity " + to_string(conn) + " requires a 3D grid");
      break;
    case Connectivity::Box:
      break;
  }
  if (conn != Connectivity::Box && width != 1)
    throw Error("named connectivity " + to_string(conn) + " only supports width 1; use box");

  const std::size_t k = 2 * width + 1;
  const std::size_t count = is2d ? k * k : k * k * k;
  if (conn == Connectivity::Box || conn == Connectivity::Eight || conn == Connectivity::TwentySix)
    return ConnectivityKernel(ndim, k, std::vector<std::uint8_t>(count, 1));

  // Face neighbors plus center.
  std::vector<std::uint8_t> w(count, 0);
  const std::size_t plane = is2d ? 0 : 1;
  auto set = [&](std::size_t z, std::size_t y, std::size_t x) { w[(z * 3 + y) * 3 + x] = 1; };
  set(plane, 1, 1);
  set(plane, 0, 1);
  set(plane, 2, 1);
  set(plane, 1, 0);
  set(plane, 1, 2);
  if (!is2d) {
    set(0, 1, 1);
    set(2, 1, 1);
  }
  return ConnectivityKernel(ndim, 3, std::move(w));
}

std::vector<PairTask> reduce(const ConstraintSet& cs, Connectivity conn, std::size_t ndim) {
  std::vector<PairTask> tasks;
  tasks.reserve(cs.constraints().size());
  for (const auto& c : cs.constraints()) {
    PairTask t;
    t.width = c.width;
    t.ids_a.set(c.first);
    if (c.kind == ConstraintKind::Containment) {
      for (unsigned id = 0; id < cs.num_classes(); ++id)
        if (id != c.first && id != c.second) t.ids_c.set(id);
    } else {
      t.ids_c.set(c.second);
    }
    t.kernel = c.width == 1 ? build_kernel(ndim, conn, 1) : build_kernel(ndim, Connectivity::Box, c.width);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

namespace {

unsigned parse_uint(std::string_view tok, std::size_t line, const char* what) {
  unsigned v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw Error("line " + std::to_string(line) + ": expected " + what + ", got '" + std::string(tok) + "'");
  return v;
}

unsigned parse_width(const std::vector<std::string>& toks, std::size_t at, std::size_t line) {
  if (toks.size() == at) return 1;
  if (toks.size() != at + 1 || toks[at].rfind("d=", 0) != 0)
    throw Error("line " + std::to_string(line) + ": trailing tokens, expected optional d=<n>");
  unsigned d = parse_uint(std::string_view(toks[at]).substr(2), line, "width");
  if (d < 1) throw Error("line " + std::to_string(line) + ": width must be >= 1");
  return d;
}

}  // namespace

ConstraintConfig parse_constraint_config(std::string_view text) {
  std::optional<unsigned> classes;
  std::optional<Connectivity> conn;
  std::vector<Constraint> list;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    const std::string& op = toks[0];
    auto bad = [&](const std::string& why) { return Error("line " + std::to_string(line) + ": " + why); };
    if (op == "classes") {
      if (toks.size() != 2) throw bad("usage: classes <c>");
      if (classes) throw bad("classes declared twice");
      classes = parse_uint(toks[1], line, "class count");
    } else if (op == "contain") {
      if (toks.size() < 4 || toks[2] != "in") throw bad("usage: contain <alpha> in <beta> [d=<n>]");
      list.push_back(Constraint::containment(parse_uint(toks[1], line, "class id"),
                                             parse_uint(toks[3], line, "class id"), parse_width(toks, 4, line)));
    } else if (op == "exclude") {
      if (toks.size() < 3) throw bad("usage: exclude <alpha> <gamma> [d=<n>]");
      list.push_back(Constraint::exclusion(parse_uint(toks[1], line, "class id"),
                                           parse_uint(toks[2], line, "class id"), parse_width(toks, 3, line)));
    } else if (op == "conn") {
      if (toks.size() != 2) throw bad("usage: conn <4|8|6|26|box>");
      try {
        conn = parse_connectivity(toks[1]);
      } catch (const Error& e) {
        throw bad(e.what());
      }
    } else {
      throw bad("unknown directive '" + op + "'");
    }
  }
  if (!classes) throw Error("constraint config is missing a 'classes' directive");
  return ConstraintConfig{ConstraintSet(*classes, std::move(list)), conn.value_or(Connectivity::Box)};
}

ConstraintConfig read_constraint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open constraint config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_constraint_config(ss.str());
}

std::string format_constraint_config(const ConstraintConfig& cfg) {
  std::string out = "classes " + std::to_string(cfg.constraints.num_classes()) + "\n";
  out += "conn " + to_string(cfg.conn) + "\n";
  for (const auto& c : cfg.constraints.constraints()) out += describe(c) + "\n";
  return out;
}

}  // namespace topo
