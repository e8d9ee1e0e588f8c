#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hsdyn/dynamics.hpp"
#include "hsdyn/rng.hpp"
#include "hsdyn/types.hpp"

namespace hsdyn::assim {

enum class Mode { strong, weak };

/// Trajectory estimation problem: fit the endmember columns in
/// `variable_indices` to the observations under the dynamical model, holding
/// the remaining columns fixed. In strong mode only the initial state is
/// free and the model is enforced exactly; in weak mode every frame's state
/// is free and model deviation is penalized with weight lambda.
class AssimilationProblem {
 public:
  AssimilationProblem(const ImageSequence& observations,
                      const AbundanceMatrix& abundances,
                      std::shared_ptr<const DynamicsModel> dynamics,
                      std::vector<Index> variable_indices,
                      const EndmemberMatrix& fixed_endmembers,
                      Mode mode = Mode::strong, double lambda = 1.0);

  const DynamicsModel& dynamics() const { return *dynamics_; }
  std::shared_ptr<const DynamicsModel> dynamics_ptr() const { return dynamics_; }
  Mode mode() const { return mode_; }
  double lambda() const { return lambda_; }
  Index frames() const { return frames_; }
  Index bands() const { return bands_; }
  Index variable_count() const { return static_cast<Index>(variable_indices_.size()); }
  const std::vector<Index>& variable_indices() const { return variable_indices_; }

  /// Dimension of one endmember's dynamical state.
  Index state_dim() const { return bands_ * dynamics_->blocks(); }
  /// Dimension of the optimization variable in strong mode.
  Index initial_dim() const { return state_dim() * variable_count(); }

  /// Gram matrix of the variable endmembers' abundance rows.
  const Matrix& gram() const { return gram_; }
  /// Projected residual data c_{v,t} (bands x variable_count per frame).
  const std::vector<Matrix>& projected() const { return projected_; }
  /// Constant part of the data misfit.
  double constant_term() const { return constant_term_; }

 private:
  std::shared_ptr<const DynamicsModel> dynamics_;
  std::vector<Index> variable_indices_;
  Mode mode_;
  double lambda_;
  Index frames_;
  Index bands_;
  Matrix gram_;
  std::vector<Matrix> projected_;
  double constant_term_;
};

struct SolveOptions {
  int max_iterations = 10000;
  double gradient_tolerance = 1e-8;
  double relative_decrease_tolerance = 1e-10;
  double armijo_constant = 1e-4;
};

struct AssimilationResult {
  Vector initial_state;       // stacked per-endmember initial states
  SpectralSeries trajectory;  // observed spectra of the variable endmembers
  std::vector<double> objective_history;
  bool converged = false;
  int iterations = 0;
};

/// Frame t of the result equals the observed part of the t-fold flow of the
/// initial states (frame 0 = initial).
SpectralSeries forward_propagate(const std::vector<Vector>& initial,
                                 const DynamicsModel& dynamics, Index frames);

/// Data misfit of the trajectory generated from `initial` (strong mode), or
/// misfit plus lambda-weighted model residual of the stacked trajectory
/// states (weak mode).
double objective(const AssimilationProblem& problem, const Vector& state);

/// Exact gradient of `objective` via the adjoint backward sweep.
Vector gradient(const AssimilationProblem& problem, const Vector& state);

/// Gradient descent with Armijo backtracking from `initial_guess`.
/// In weak mode the guess is the initial state; the starting trajectory is
/// its forward propagation.
AssimilationResult solve(const AssimilationProblem& problem, const Vector& initial_guess,
                         const SolveOptions& options = {});

/// Direct normal-equation solution for bandwise linear dynamics
/// (strong mode). Agrees with `solve` on its domain.
AssimilationResult solve_linear_closed_form(const AssimilationProblem& problem);

struct VcaInitialization {
  AbundanceMatrix abundances;
  EndmemberMatrix endmembers;
};

/// Crude starting point: VCA endmembers and simplex-constrained abundances
/// from the first frame (or from all frames stacked when frame0_only is
/// false; abundances still come from frame 0).
VcaInitialization initialize_from_vca(const ImageSequence& observations, Index endmembers,
                                      bool frame0_only, Rng& rng);

/// Builds the stacked strong-mode initial guess from endmember estimates:
/// velocity blocks zero, static blocks carrying the estimate when present.
Vector make_initial_guess(const AssimilationProblem& problem,
                          const Matrix& endmember_estimates);

}  // namespace hsdyn::assim
