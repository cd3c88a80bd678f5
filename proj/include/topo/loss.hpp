#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topo/constraints.hpp"
#include "topo/detect.hpp"
#include "topo/grid.hpp"

namespace topo {

enum class Surrogate { CE, MSE, Dice };

Surrogate parse_surrogate(std::string_view name);
std::string to_string(Surrogate s);

/// Probabilities below this are clamped before taking the log.
inline constexpr double kLogFloor = 1e-12;

struct LossConfig {
  Surrogate surrogate = Surrogate::CE;
  double lambda_dice = 1.0;
  double lambda_ti = 1e-4;
  double epsilon = 1e-5;
  /// Reject likelihoods whose channels do not sum to one (the CE term needs
  /// probabilities). Gradient checks perturb single entries and turn this off.
  bool check_normalized = true;

  /// lambda_ti = 1e-4 for 2D, 1e-6 for 3D.
  static LossConfig defaults_for(std::size_t ndim);
};

struct MaskedLoss {
  double value = 0.0;
  std::vector<double> gradient;  // empty unless requested; same layout as f
  bool log_floor_hit = false;
};

/// Pixel-wise surrogate restricted to the sites set in `critical`:
///   CE   mean over masked sites of -log f[g(x)](x)
///   MSE  mean over masked sites and channels of (f - onehot(g))^2
///   Dice 1 - mean over classes of (2 sum f_k [g=k] + eps) / (sum f_k^2 + sum [g=k] + eps)
/// An empty mask gives 0. The mask is treated as a constant.
MaskedLoss masked_loss(const LikelihoodGrid& f, const LabelGrid& g, const BinaryMask& critical, Surrogate surrogate,
                       double epsilon = 1e-5, bool want_gradient = false);

struct LossReport {
  double l_ce = 0.0;
  double l_dice = 0.0;
  double l_ti = 0.0;
  double l_total = 0.0;
  std::optional<std::vector<double>> gradient;  // dL_total/df, class-major like f
  BinaryMask critical;                          // V derived from argmax(f)
  std::vector<std::string> warnings;
};

/// L_total = L_ce + lambda_dice * L_dice + lambda_ti * L_ti, with V taken from
/// detection on argmax(f). V and the argmax are constants for the gradient.
LossReport total_loss(const LikelihoodGrid& f, const LabelGrid& g, const ConstraintSet& cs, Connectivity conn,
                      const LossConfig& cfg, bool want_gradient = false, Algorithm algo = Algorithm::Auto);

/// Throws naming the first site whose channels do not sum to one.
void require_normalized(const LikelihoodGrid& f);

}  // namespace topo
