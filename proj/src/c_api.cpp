#include "topo/c_api.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>

#include "topo/constraints.hpp"
#include "topo/detect.hpp"
#include "topo/loss.hpp"

namespace {

void set_error(char* err, std::size_t err_len, const char* msg) {
  if (!err || err_len == 0) return;
  const std::size_t n = std::min(err_len - 1, std::strlen(msg));
  std::memcpy(err, msg, n);
  err[n] = '\0';
}

template <class F>
int guarded(char* err, std::size_t err_len, F&& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    set_error(err, err_len, e.what());
  } catch (...) {
    set_error(err, err_len, "unknown error");
  }
  return 1;
}

topo::Shape shape_of(const std::size_t* dims, std::size_t ndim) {
  if (!dims) throw topo::Error("dims pointer is null");
  return topo::Shape(std::span<const std::size_t>(dims, ndim));
}

topo::ConstraintConfig config_of(const char* text, const char* conn) {
  if (!text) throw topo::Error("constraint config is null");
  auto cfg = topo::parse_constraint_config(text);
  if (conn && *conn) cfg.conn = topo::parse_connectivity(conn);
  return cfg;
}

}  // namespace

extern "C" {

int topo_api_version(void) { return TOPO_C_API_VERSION; }

int topo_detect_u8(const uint8_t* labels, const size_t* dims, size_t ndim, unsigned num_classes,
                   const char* constraint_cfg, const char* conn, uint8_t* mask_out, size_t* violations,
                   size_t* foreground, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!labels || !mask_out) throw topo::Error("null buffer");
    const topo::Shape shape = shape_of(dims, ndim);
    const auto cfg = config_of(constraint_cfg, conn);
    const unsigned classes = num_classes ? num_classes : cfg.constraints.num_classes();
    topo::LabelGrid g(shape, classes, std::vector<std::uint8_t>(labels, labels + shape.size()));
    const auto r = topo::detect(g, cfg.constraints, cfg.conn);
    std::copy(r.v.bits().begin(), r.v.bits().end(), mask_out);
    if (violations) *violations = r.violation_count;
    if (foreground) *foreground = r.foreground_count;
  });
}

int topo_loss_ti_f32(const float* likelihood, const uint8_t* gt, const size_t* dims, size_t ndim,
                     unsigned num_classes, const char* constraint_cfg, const char* conn, const char* surrogate,
                     double* l_ti, double* grad_out, char* err, size_t err_len) {
  return guarded(err, err_len, [&] {
    if (!likelihood || !gt || !l_ti) throw topo::Error("null buffer");
    const topo::Shape shape = shape_of(dims, ndim);
    const auto cfg = config_of(constraint_cfg, conn);
    const unsigned classes = num_classes ? num_classes : cfg.constraints.num_classes();
    const std::size_t count = shape.size() * classes;
    std::vector<double> values(likelihood, likelihood + count);
    topo::LikelihoodGrid f(shape, classes, std::move(values));
    topo::LabelGrid g(shape, classes, std::vector<std::uint8_t>(gt, gt + shape.size()));
    const auto s = topo::parse_surrogate(surrogate ? surrogate : "ce");
    if (s == topo::Surrogate::CE) topo::require_normalized(f);
    const auto v = topo::detect(topo::argmax_labels(f), cfg.constraints, cfg.conn).v;
    const auto loss = topo::masked_loss(f, g, v, s, 1e-5, grad_out != nullptr);
    *l_ti = loss.value;
    if (grad_out) std::copy(loss.gradient.begin(), loss.gradient.end(), grad_out);
  });
}

}  // extern "C"
