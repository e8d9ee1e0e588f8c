#include "hsdyn/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace hsdyn {

BandwiseLinearDynamics::BandwiseLinearDynamics(Matrix transition,
                                               Eigen::RowVectorXd observation,
                                               std::string name)
    : transition_(std::move(transition)),
      observation_(std::move(observation)),
      name_(std::move(name)) {
  if (transition_.rows() != transition_.cols() || transition_.rows() < 1)
    throw std::invalid_argument("BandwiseLinearDynamics: transition must be square");
  if (observation_.size() != transition_.rows())
    throw std::invalid_argument("BandwiseLinearDynamics: observation size mismatch");
  if (!transition_.allFinite() || !observation_.allFinite())
    throw std::invalid_argument("BandwiseLinearDynamics: non-finite coefficients");
}

namespace {

Index block_length(const Vector& state, int k, const char* what) {
  if (state.size() % k != 0)
    throw std::invalid_argument(std::string(what) + ": state size not divisible by block count");
  return state.size() / k;
}

}  // namespace

Vector BandwiseLinearDynamics::step(const Vector& state) const {
  if (!state.allFinite())
    throw std::invalid_argument("BandwiseLinearDynamics::step: non-finite state");
  const int k = blocks();
  const Index bands = block_length(state, k, "step");
  Eigen::Map<const Matrix> blocks_view(state.data(), bands, k);
  Matrix next = blocks_view * transition_.transpose();
  return Eigen::Map<Vector>(next.data(), next.size());
}

Vector BandwiseLinearDynamics::jacobian_transpose_apply(const Vector& /*state*/,
                                                        const Vector& cotangent) const {
  const int k = blocks();
  const Index bands = block_length(cotangent, k, "jacobian_transpose_apply");
  Eigen::Map<const Matrix> blocks_view(cotangent.data(), bands, k);
  Matrix out = blocks_view * transition_;
  return Eigen::Map<Vector>(out.data(), out.size());
}

Vector BandwiseLinearDynamics::observe(const Vector& state) const {
  const int k = blocks();
  const Index bands = block_length(state, k, "observe");
  Eigen::Map<const Matrix> blocks_view(state.data(), bands, k);
  return blocks_view * observation_.transpose();
}

Vector BandwiseLinearDynamics::observe_adjoint(const Vector& cotangent,
                                               Index state_dim) const {
  const int k = blocks();
  if (state_dim % k != 0 || cotangent.size() != state_dim / k)
    throw std::invalid_argument("observe_adjoint: dimension mismatch");
  Vector out(state_dim);
  Eigen::Map<Matrix> blocks_view(out.data(), cotangent.size(), k);
  blocks_view = cotangent * observation_;
  return out;
}

Eigen::Matrix2d second_order_transition(double beta, double dt) {
  if (!std::isfinite(beta) || !std::isfinite(dt))
    throw std::invalid_argument("second_order_transition: non-finite parameter");
  if (dt < 0.0) throw std::invalid_argument("second_order_transition: dt must be >= 0");
  Eigen::Matrix2d m;
  if (dt == 0.0) {
    m.setIdentity();
  } else if (beta < 0.0) {
    const double w = std::sqrt(-beta);
    const double c = std::cos(w * dt);
    const double s = std::sin(w * dt);
    m << c, s / w, -w * s, c;
  } else if (beta == 0.0) {
    // Limit form: straight-line drift.
    m << 1.0, dt, 0.0, 1.0;
  } else {
    const double w = std::sqrt(beta);
    const double ch = std::cosh(w * dt);
    const double sh = std::sinh(w * dt);
    m << ch, sh / w, w * sh, ch;
  }
  return m;
}

AugmentedState linear_second_order_step(const AugmentedState& state, double beta,
                                        double dt) {
  const Eigen::Matrix2d m = second_order_transition(beta, dt);
  Vector pos = m(0, 0) * state.position() + m(0, 1) * state.velocity();
  Vector vel = m(1, 0) * state.position() + m(1, 1) * state.velocity();
  return AugmentedState(std::move(pos), std::move(vel));
}

std::shared_ptr<const DynamicsModel> make_identity_dynamics() {
  Matrix m(1, 1);
  m << 1.0;
  Eigen::RowVectorXd o(1);
  o << 1.0;
  return std::make_shared<BandwiseLinearDynamics>(std::move(m), std::move(o),
                                                  "identity");
}

std::shared_ptr<const DynamicsModel> make_second_order_dynamics(double beta, double dt) {
  Matrix m = second_order_transition(beta, dt);
  Eigen::RowVectorXd o(2);
  o << 1.0, 0.0;
  return std::make_shared<BandwiseLinearDynamics>(
      std::move(m), std::move(o),
      "second_order(beta=" + std::to_string(beta) + ",dt=" + std::to_string(dt) + ")");
}

std::shared_ptr<const DynamicsModel> make_second_order_about_mean_dynamics(double beta,
                                                                           double dt) {
  Matrix m = Matrix::Identity(3, 3);
  m.topLeftCorner<2, 2>() = second_order_transition(beta, dt);
  Eigen::RowVectorXd o(3);
  o << 1.0, 0.0, 1.0;
  return std::make_shared<BandwiseLinearDynamics>(
      std::move(m), std::move(o),
      "second_order_about_mean(beta=" + std::to_string(beta) +
          ",dt=" + std::to_string(dt) + ")");
}

}  // namespace hsdyn
