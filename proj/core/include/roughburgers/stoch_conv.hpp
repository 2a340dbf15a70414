#pragma once

#include <memory>
#include <optional>

#include "roughburgers/grid.hpp"
#include "roughburgers/heat.hpp"
#include "roughburgers/noise.hpp"
#include "roughburgers/rough_path.hpp"

namespace rough {

// The linear stochastic convolution X with its per-time spatial lifts.
struct GaussianField {
  SpaceTimeField field;
  std::vector<std::shared_ptr<const RoughPath>> lifts;  // one per time slice

  const RoughPath& lift(int l) const { return *lifts.at(l); }
};

enum class SimMode { coupled, spectral };

// coupled: mild Euler X(t+dt) = S(dt)(X(t) + dW) on the shared increment
// stream (the variant every coupled run uses). spectral: exact per-mode OU
// updates, for standalone distributional checks.
GaussianField simulate_X(const NoiseSource& noise, SimMode mode);

// Psi^theta for a given matrix field theta, coupled to X through the same
// increments; remainders are derived against X slice-wise.
struct ControlledConvolution {
  SpaceTimeField psi;        // dim n
  SpaceTimeField thetavals;  // dim n*n, theta along the driver
  std::shared_ptr<const GaussianField> coupled_x;
  bool mollified = false;
  double eps = 0.0;
  bool underresolved_eps = false;

  TwoPointField remainder_at(int l) const;
  double remainder_norm(int l, double two_alpha) const;
  double remainder_norm_dyadic(int l, double two_alpha) const;
  // Psi(t_l, .) as a controlled path over the coupled lift.
  ControlledPath controlled_slice(int l) const;
};

ControlledConvolution stoch_conv(const SpaceTimeField& theta, const NoiseSource& noise,
                                 std::shared_ptr<const GaussianField> X);
ControlledConvolution stoch_conv(const SpaceTimeField& theta, const NoiseSource& noise);

// Same recursion with mollified increments and the lift of X_eps.
ControlledConvolution stoch_conv_mollified(const SpaceTimeField& theta,
                                           const NoiseSource& noise, double eps);
ControlledConvolution stoch_conv_mollified(const SpaceTimeField& theta,
                                           const NoiseSource& noise, double eps,
                                           std::shared_ptr<const GaussianField> X_eps);

// Coupled simulation on mollified increments (the X_eps reference).
GaussianField simulate_X_mollified(const NoiseSource& noise, double eps);

// R(x,y) = dPsi(x,y) - theta(x) dX(x,y) for single slices.
TwoPointField remainder(const Field& psi, const Field& theta_t, const Field& x_t);

// Running suprema of the three stopped quantities; triggers at the first
// grid time any threshold is exceeded. In-loop norms use the dyadic-lag
// estimator.
struct MonitorThresholds {
  double K1 = 10.0, K2 = 10.0, K3 = 10.0;
};

class StoppingMonitor {
 public:
  StoppingMonitor(MonitorThresholds k, double alpha, double dt);

  // Slices must arrive in time order (l = 0, 1, 2, ...).
  void update(int l, const Field& x_slice, const RoughPath& lift,
              const Field& psi_slice, const Field& theta_slice);

  bool triggered() const { return triggered_at_.has_value(); }
  double triggered_at() const { return triggered_at_.value_or(-1.0); }
  double sup_x_parabolic() const { return sup_x_; }   // ratio + |XX|_{2a}
  double sup_psi_alpha() const { return sup_psi_; }
  double sup_remainder() const { return sup_rem_; }
  const MonitorThresholds& thresholds() const { return k_; }

 private:
  double remainder_dyadic(const Field& psi, const Field& theta, const Field& x) const;
  MonitorThresholds k_;
  double alpha_, dt_;
  int next_l_ = 0;
  std::vector<Field> xhist_;
  double sup_ratio_x_ = 0.0;  // running parabolic increment ratio of X
  double sup_x_ = 0.0;
  double sup_psi_ = 0.0;
  double sup_rem_ = 0.0;
  std::optional<double> triggered_at_;
};

// One-shot spatial slice of X at time t in spectral mode (exact OU marginal),
// modes 1..kmax plus the k = 0 Brownian level.
Field spectral_slice(const NoiseSpec& spec, double t, int kmax);

// Time series t_l -> X(t_l, x0) in spectral mode. Modes whose one-step decay
// factor is below 2^-52 are stepped as independent draws (the OU memory term
// is unrepresentable at double precision).
std::vector<double> spectral_point_series(const NoiseSpec& spec, double x0, int kmax);

}  // namespace rough
