#pragma once

#include <memory>
#include <string>

#include "hsdyn/types.hpp"

namespace hsdyn {

/// Discrete flow over one frame interval, with its adjoint.
///
/// States are flat vectors. A model may carry more than one L-block per
/// spectrum (e.g. position and velocity); `blocks()` reports how many, and
/// `observe` maps a state to the spectrum the mixing model sees.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  /// One-step flow. Deterministic for fixed parameters.
  virtual Vector step(const Vector& state) const = 0;

  /// Vector-Jacobian product: returns J(state)^T * cotangent where J is the
  /// Jacobian of `step` at the linearization point.
  virtual Vector jacobian_transpose_apply(const Vector& state,
                                          const Vector& cotangent) const = 0;

  virtual std::string descriptor() const = 0;

  /// Number of stacked L-blocks per spectrum (1 for plain maps).
  virtual int blocks() const { return 1; }

  /// Spectrum observed from a state (default: the state itself).
  virtual Vector observe(const Vector& state) const { return state; }

  /// Adjoint of `observe`: embeds a spectrum cotangent into state space.
  virtual Vector observe_adjoint(const Vector& cotangent, Index state_dim) const {
    if (cotangent.size() != state_dim)
      throw std::invalid_argument("observe_adjoint: dimension mismatch");
    return cotangent;
  }
};

/// Linear flow acting independently on every band: the state stacks k blocks
/// of length L and each band evolves by a fixed k x k transition matrix.
/// The observed spectrum is a fixed linear combination of the blocks.
class BandwiseLinearDynamics final : public DynamicsModel {
 public:
  BandwiseLinearDynamics(Matrix transition, Eigen::RowVectorXd observation,
                         std::string name);

  Vector step(const Vector& state) const override;
  Vector jacobian_transpose_apply(const Vector& state,
                                  const Vector& cotangent) const override;
  std::string descriptor() const override { return name_; }
  int blocks() const override { return static_cast<int>(transition_.rows()); }
  Vector observe(const Vector& state) const override;
  Vector observe_adjoint(const Vector& cotangent, Index state_dim) const override;

  const Matrix& transition() const { return transition_; }
  const Eigen::RowVectorXd& observation() const { return observation_; }

 private:
  Matrix transition_;             // k x k, applied per band
  Eigen::RowVectorXd observation_;  // 1 x k, block weights of the observed spectrum
  std::string name_;
};

/// Per-band transition of the second order system d/dt [s; v] = [[0,1],[b,0]] [s; v]
/// over an interval dt (exact matrix exponential).
Eigen::Matrix2d second_order_transition(double beta, double dt);

/// Flow of the second order dynamics applied bandwise to an augmented state.
AugmentedState linear_second_order_step(const AugmentedState& state, double beta,
                                        double dt);

/// Identity flow (static endmembers). State = spectrum.
std::shared_ptr<const DynamicsModel> make_identity_dynamics();

/// Second order oscillation; state = [position; velocity], observed = position.
std::shared_ptr<const DynamicsModel> make_second_order_dynamics(double beta, double dt);

/// Second order oscillation around an unknown static mean; state =
/// [deviation; velocity; mean], observed = deviation + mean.
std::shared_ptr<const DynamicsModel> make_second_order_about_mean_dynamics(double beta,
                                                                           double dt);

}  // namespace hsdyn
