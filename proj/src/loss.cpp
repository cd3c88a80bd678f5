#include "topo/loss.hpp"

#include <cmath>
#include <sstream>

namespace topo {

Surrogate parse_surrogate(std::string_view name) {
  if (name == "ce" || name == "CE") return Surrogate::CE;
  if (name == "mse" || name == "MSE") return Surrogate::MSE;
  if (name == "dice" || name == "DICE") return Surrogate::Dice;
  throw Error("unknown surrogate '" + std::string(name) + "' (expected ce, mse or dice)");
}

std::string to_string(Surrogate s) {
  switch (s) {
    case Surrogate::CE: return "ce";
    case Surrogate::MSE: return "mse";
    case Surrogate::Dice: return "dice";
  }
  return "?";
}

LossConfig LossConfig::defaults_for(std::size_t ndim) {
  LossConfig cfg;
  cfg.lambda_ti = ndim == 3 ? 1e-6 : 1e-4;
  return cfg;
}

void require_normalized(const LikelihoodGrid& f) {
  const std::size_t bad = f.first_unnormalized_site();
  if (bad == f.shape().size()) return;
  double sum = 0.0;
  for (unsigned k = 0; k < f.num_classes(); ++k) sum += f.value(k, bad);
  std::ostringstream os;
  os << "likelihood is not normalized: channels at site " << bad << " sum to " << sum
     << " (cross-entropy needs per-site probabilities)";
  throw Error(os.str());
}

namespace {

void check_shapes(const LikelihoodGrid& f, const LabelGrid& g) {
  if (!(f.shape() == g.shape()))
    throw Error("likelihood dims " + f.shape().to_string() + " do not match labels " + g.shape().to_string());
  if (f.num_classes() != g.num_classes())
    throw Error("likelihood has " + std::to_string(f.num_classes()) + " channels but labels declare " +
                std::to_string(g.num_classes()) + " classes");
}

// Adds the surrogate over `sites` (all sites when null) and, when grad is
// non-null, accumulates scale * dL/df into it.
MaskedLoss pixel_loss(const LikelihoodGrid& f, const LabelGrid& g, const BinaryMask* sites, Surrogate s,
                      double eps, std::vector<double>* grad, double scale) {
  const std::size_t n = f.shape().size();
  const unsigned c = f.num_classes();
  auto in = [&](std::size_t i) { return sites == nullptr || (*sites)[i]; };
  std::size_t m = 0;
  for (std::size_t i = 0; i < n; ++i) m += in(i) ? 1 : 0;

  MaskedLoss out;
  if (m == 0) return out;
  const double inv_m = 1.0 / static_cast<double>(m);

  switch (s) {
    case Surrogate::CE: {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!in(i)) continue;
        const unsigned k = g[i];
        const double p = f.value(k, i);
        if (p <= kLogFloor) {
          out.log_floor_hit = true;
          sum -= std::log(kLogFloor);
        } else {
          sum -= std::log(p);
          if (grad) (*grad)[k * n + i] -= scale * inv_m / p;
        }
      }
      out.value = sum * inv_m;
      break;
    }
    case Surrogate::MSE: {
      const double inv = inv_m / c;
      double sum = 0.0;
      for (unsigned k = 0; k < c; ++k)
        for (std::size_t i = 0; i < n; ++i) {
          if (!in(i)) continue;
          const double diff = f.value(k, i) - (g[i] == k ? 1.0 : 0.0);
          sum += diff * diff;
          if (grad) (*grad)[k * n + i] += scale * 2.0 * diff * inv;
        }
      out.value = sum * inv;
      break;
    }
    case Surrogate::Dice: {
      double mean = 0.0;
      for (unsigned k = 0; k < c; ++k) {
        double inter = 0.0, pred_sq = 0.0, truth = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          if (!in(i)) continue;
          const double p = f.value(k, i);
          const double t = g[i] == k ? 1.0 : 0.0;
          inter += p * t;
          pred_sq += p * p;
          truth += t;
        }
        const double num = 2.0 * inter + eps;
        const double den = pred_sq + truth + eps;
        mean += num / den;
        if (grad) {
          const double w = -scale / c;
          for (std::size_t i = 0; i < n; ++i) {
            if (!in(i)) continue;
            const double p = f.value(k, i);
            const double t = g[i] == k ? 1.0 : 0.0;
            (*grad)[k * n + i] += w * (2.0 * t * den - num * 2.0 * p) / (den * den);
          }
        }
      }
      out.value = 1.0 - mean / c;
      break;
    }
  }
  return out;
}

}  // namespace

MaskedLoss masked_loss(const LikelihoodGrid& f, const LabelGrid& g, const BinaryMask& critical, Surrogate surrogate,
                       double epsilon, bool want_gradient) {
  check_shapes(f, g);
  if (!(critical.shape() == f.shape())) throw Error("critical mask dims do not match the likelihood grid");
  if (!(epsilon > 0.0)) throw Error("dice smoothing must be positive");
  std::vector<double> grad;
  if (want_gradient) grad.assign(f.values().size(), 0.0);
  MaskedLoss out = pixel_loss(f, g, &critical, surrogate, epsilon, want_gradient ? &grad : nullptr, 1.0);
  out.gradient = std::move(grad);
  return out;
}

LossReport total_loss(const LikelihoodGrid& f, const LabelGrid& g, const ConstraintSet& cs, Connectivity conn,
                      const LossConfig& cfg, bool want_gradient, Algorithm algo) {
  check_shapes(f, g);
  if (!(cfg.epsilon > 0.0)) throw Error("dice smoothing must be positive");
  if (!(cfg.lambda_dice >= 0.0) || !(cfg.lambda_ti >= 0.0) || !std::isfinite(cfg.lambda_dice) ||
      !std::isfinite(cfg.lambda_ti))
    throw Error("loss weights must be finite and non-negative");
  if (cfg.check_normalized) require_normalized(f);

  LossReport r;
  r.critical = detect(argmax_labels(f), cs, conn, algo).v;

  std::vector<double> grad;
  std::vector<double>* gp = nullptr;
  if (want_gradient) {
    grad.assign(f.values().size(), 0.0);
    gp = &grad;
  }
  const MaskedLoss ce = pixel_loss(f, g, nullptr, Surrogate::CE, cfg.epsilon, gp, 1.0);
  const MaskedLoss dice = pixel_loss(f, g, nullptr, Surrogate::Dice, cfg.epsilon, gp, cfg.lambda_dice);
  const MaskedLoss ti = pixel_loss(f, g, &r.critical, cfg.surrogate, cfg.epsilon, gp, cfg.lambda_ti);
  r.l_ce = ce.value;
  r.l_dice = dice.value;
  r.l_ti = ti.value;
  r.l_total = r.l_ce + cfg.lambda_dice * r.l_dice + cfg.lambda_ti * r.l_ti;
  if (ce.log_floor_hit || ti.log_floor_hit)
    r.warnings.push_back("log-domain underflow: target probability <= 1e-12 was floored");
  if (want_gradient) r.gradient = std::move(grad);
  return r;
}

}  // namespace topo
