#include "hsdyn/assimilate.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hsdyn/errors.hpp"
#include "hsdyn/unmix.hpp"

namespace hsdyn::assim {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::vector<double> frame_timestamps(Index frames) {
  std::vector<double> ts(static_cast<std::size_t>(frames));
  for (Index t = 0; t < frames; ++t) ts[static_cast<std::size_t>(t)] = static_cast<double>(t);
  return ts;
}

}  // namespace

AssimilationProblem::AssimilationProblem(const ImageSequence& observations,
                                         const AbundanceMatrix& abundances,
                                         std::shared_ptr<const DynamicsModel> dynamics,
                                         std::vector<Index> variable_indices,
                                         const EndmemberMatrix& fixed_endmembers,
                                         Mode mode, double lambda)
    : dynamics_(std::move(dynamics)),
      variable_indices_(std::move(variable_indices)),
      mode_(mode),
      lambda_(lambda),
      frames_(observations.size()),
      bands_(observations.bands()) {
  require(dynamics_ != nullptr, "assimilation: dynamics model required");
  require(lambda_ >= 0.0, "assimilation: lambda must be >= 0");
  require(!variable_indices_.empty(), "assimilation: at least one variable endmember");
  const Index p = abundances.count();
  require(abundances.pixels() == observations.pixels(),
          "assimilation: abundance pixel count must match observations");
  require(fixed_endmembers.bands() == bands_ && fixed_endmembers.count() == p,
          "assimilation: fixed endmember shape mismatch");
  for (Index v : variable_indices_)
    require(v >= 0 && v < p, "assimilation: variable index out of range");
  for (std::size_t i = 0; i < variable_indices_.size(); ++i)
    for (std::size_t j = i + 1; j < variable_indices_.size(); ++j)
      require(variable_indices_[i] != variable_indices_[j],
              "assimilation: duplicate variable index");

  const Matrix& a = abundances.matrix();
  const Index n_var = variable_count();

  Matrix var_rows(n_var, a.cols());
  for (Index v = 0; v < n_var; ++v)
    var_rows.row(v) = a.row(variable_indices_[static_cast<std::size_t>(v)]);
  gram_ = var_rows * var_rows.transpose();

  Matrix fixed_masked = fixed_endmembers.matrix();
  for (Index v : variable_indices_) fixed_masked.col(v).setZero();
  const Matrix background = fixed_masked * a;  // L x N, constant over time

  projected_.reserve(static_cast<std::size_t>(frames_));
  constant_term_ = 0.0;
  for (Index t = 0; t < frames_; ++t) {
    Matrix residual = observations.frame(t) - background;
    constant_term_ += 0.5 * residual.squaredNorm();
    projected_.push_back(residual * var_rows.transpose());  // L x V
  }
}

SpectralSeries forward_propagate(const std::vector<Vector>& initial,
                                 const DynamicsModel& dynamics, Index frames) {
  require(frames >= 1, "forward_propagate: at least one frame");
  require(!initial.empty(), "forward_propagate: at least one endmember state");
  const Index bands = dynamics.observe(initial.front()).size();

  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(frames));
  std::vector<Vector> states = initial;
  for (Index t = 0; t < frames; ++t) {
    Matrix frame(bands, static_cast<Index>(states.size()));
    for (std::size_t v = 0; v < states.size(); ++v) frame.col(static_cast<Index>(v)) =
        dynamics.observe(states[v]);
    out.push_back(std::move(frame));
    if (t + 1 < frames)
      for (auto& s : states) s = dynamics.step(s);
  }
  return SpectralSeries(std::move(out), frame_timestamps(frames));
}

namespace {

struct Evaluation {
  double value = 0.0;
  Vector gradient;
};

// Data misfit of a set of observed spectra at frame t, and its gradient
// with respect to those spectra.
double frame_misfit(const AssimilationProblem& pb, Index t, const Matrix& spectra,
                    Matrix* grad) {
  const Matrix& proj = pb.projected()[static_cast<std::size_t>(t)];  // L x V
  const Matrix& g = pb.gram();                                       // V x V
  const Matrix cross = spectra.transpose() * spectra;                // V x V
  double value = -(spectra.cwiseProduct(proj)).sum() + 0.5 * (g.cwiseProduct(cross)).sum();
  if (grad) *grad = spectra * g - proj;
  return value;
}

Evaluation eval_strong(const AssimilationProblem& pb, const Vector& x, bool want_grad) {
  const Index n_var = pb.variable_count();
  const Index dim = pb.state_dim();
  require(x.size() == pb.initial_dim(), "assimilation: initial state size mismatch");
  const auto& dyn = pb.dynamics();
  const Index frames = pb.frames();

  // Forward sweep, storing every state for the adjoint pass.
  std::vector<std::vector<Vector>> states(
      static_cast<std::size_t>(n_var),
      std::vector<Vector>(static_cast<std::size_t>(frames)));
  for (Index v = 0; v < n_var; ++v) {
    Vector s = x.segment(v * dim, dim);
    for (Index t = 0; t < frames; ++t) {
      states[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)] = s;
      if (t + 1 < frames) s = dyn.step(s);
    }
  }

  Evaluation ev;
  ev.value = pb.constant_term();
  std::vector<std::vector<Vector>> cotangents;
  if (want_grad)
    cotangents.assign(static_cast<std::size_t>(n_var),
                      std::vector<Vector>(static_cast<std::size_t>(frames)));

  Matrix spectra(pb.bands(), n_var);
  Matrix spectra_grad;
  for (Index t = 0; t < frames; ++t) {
    for (Index v = 0; v < n_var; ++v)
      spectra.col(v) = dyn.observe(states[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)]);
    ev.value += frame_misfit(pb, t, spectra, want_grad ? &spectra_grad : nullptr);
    if (want_grad) {
      for (Index v = 0; v < n_var; ++v)
        cotangents[static_cast<std::size_t>(v)][static_cast<std::size_t>(t)] =
            dyn.observe_adjoint(spectra_grad.col(v), dim);
    }
  }

  if (want_grad) {
    ev.gradient.resize(x.size());
    for (Index v = 0; v < n_var; ++v) {
      const auto& xs = states[static_cast<std::size_t>(v)];
      const auto& gs = cotangents[static_cast<std::size_t>(v)];
      Vector adj = gs[static_cast<std::size_t>(frames - 1)];
      for (Index t = frames - 2; t >= 0; --t) {
        adj = gs[static_cast<std::size_t>(t)] +
              dyn.jacobian_transpose_apply(xs[static_cast<std::size_t>(t)], adj);
      }
      ev.gradient.segment(v * dim, dim) = adj;
    }
  }
  return ev;
}

Evaluation eval_weak(const AssimilationProblem& pb, const Vector& x, bool want_grad) {
  const Index n_var = pb.variable_count();
  const Index dim = pb.state_dim();
  const Index frames = pb.frames();
  require(x.size() == pb.initial_dim() * frames,
          "assimilation: weak-mode state size mismatch");
  const auto& dyn = pb.dynamics();
  const double lambda = pb.lambda();

  auto state_at = [&](Index v, Index t) {
    return x.segment((v * frames + t) * dim, dim);
  };

  Evaluation ev;
  ev.value = pb.constant_term();
  if (want_grad) ev.gradient = Vector::Zero(x.size());
  auto grad_at = [&](Index v, Index t) {
    return ev.gradient.segment((v * frames + t) * dim, dim);
  };

  Matrix spectra(pb.bands(), n_var);
  Matrix spectra_grad;
  for (Index t = 0; t < frames; ++t) {
    for (Index v = 0; v < n_var; ++v) spectra.col(v) = dyn.observe(state_at(v, t));
    ev.value += frame_misfit(pb, t, spectra, want_grad ? &spectra_grad : nullptr);
    if (want_grad)
      for (Index v = 0; v < n_var; ++v)
        grad_at(v, t) += dyn.observe_adjoint(spectra_grad.col(v), dim);
  }

  for (Index v = 0; v < n_var; ++v) {
    for (Index t = 1; t < frames; ++t) {
      const Vector prev = state_at(v, t - 1);
      const Vector residual = state_at(v, t) - dyn.step(prev);
      ev.value += 0.5 * lambda * residual.squaredNorm();
      if (want_grad && lambda > 0.0) {
        grad_at(v, t) += lambda * residual;
        grad_at(v, t - 1) -= lambda * dyn.jacobian_transpose_apply(prev, residual);
      }
    }
  }
  return ev;
}

Evaluation evaluate(const AssimilationProblem& pb, const Vector& x, bool want_grad) {
  return pb.mode() == Mode::strong ? eval_strong(pb, x, want_grad)
                                   : eval_weak(pb, x, want_grad);
}

SpectralSeries weak_trajectory(const AssimilationProblem& pb, const Vector& x) {
  const Index n_var = pb.variable_count();
  const Index dim = pb.state_dim();
  const Index frames = pb.frames();
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (Index t = 0; t < frames; ++t) {
    Matrix frame(pb.bands(), n_var);
    for (Index v = 0; v < n_var; ++v)
      frame.col(v) = pb.dynamics().observe(x.segment((v * frames + t) * dim, dim));
    out.push_back(std::move(frame));
  }
  return SpectralSeries(std::move(out), frame_timestamps(frames));
}

std::vector<Vector> split_states(const AssimilationProblem& pb, const Vector& x) {
  const Index dim = pb.state_dim();
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(pb.variable_count()));
  for (Index v = 0; v < pb.variable_count(); ++v)
    states.push_back(x.segment(v * dim, dim));
  return states;
}

}  // namespace

double objective(const AssimilationProblem& problem, const Vector& state) {
  return evaluate(problem, state, false).value;
}

Vector gradient(const AssimilationProblem& problem, const Vector& state) {
  return evaluate(problem, state, true).gradient;
}

AssimilationResult solve(const AssimilationProblem& problem, const Vector& initial_guess,
                         const SolveOptions& options) {
  Vector x = initial_guess;
  if (problem.mode() == Mode::weak && x.size() == problem.initial_dim()) {
    // Expand an initial-state guess into its propagated trajectory.
    Vector full(problem.initial_dim() * problem.frames());
    const Index dim = problem.state_dim();
    for (Index v = 0; v < problem.variable_count(); ++v) {
      Vector s = initial_guess.segment(v * dim, dim);
      for (Index t = 0; t < problem.frames(); ++t) {
        full.segment((v * problem.frames() + t) * dim, dim) = s;
        if (t + 1 < problem.frames()) s = problem.dynamics().step(s);
      }
    }
    x = std::move(full);
  }

  double value = objective(problem, x);
  if (!std::isfinite(value))
    throw NumericError("assimilation solve: non-finite objective at initial guess");

  AssimilationResult result;
  result.objective_history.push_back(value);

  double step = 1.0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Vector grad = gradient(problem, x);
    const double grad_norm = grad.norm();
    if (grad_norm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // Armijo backtracking along the steepest descent direction.
    const double slope = grad.squaredNorm();
    double t = step;
    bool accepted = false;
    Vector candidate;
    double candidate_value = 0.0;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      candidate = x - t * grad;
      candidate_value = objective(problem, candidate);
      if (std::isfinite(candidate_value) &&
          candidate_value <= value - options.armijo_constant * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    x = std::move(candidate);
    const double previous = value;
    value = candidate_value;
    result.objective_history.push_back(value);
    result.iterations = iter + 1;
    step = 2.0 * t;

    const double scale = std::max(std::abs(value), std::numeric_limits<double>::min());
    if (previous - value <= options.relative_decrease_tolerance * scale) {
      result.converged = true;
      break;
    }
  }

  if (problem.mode() == Mode::strong) {
    result.initial_state = x;
    result.trajectory =
        forward_propagate(split_states(problem, x), problem.dynamics(), problem.frames());
  } else {
    const Index dim = problem.state_dim();
    result.initial_state.resize(problem.initial_dim());
    for (Index v = 0; v < problem.variable_count(); ++v)
      result.initial_state.segment(v * dim, dim) =
          x.segment(v * problem.frames() * dim, dim);
    result.trajectory = weak_trajectory(problem, x);
  }
  return result;
}

AssimilationResult solve_linear_closed_form(const AssimilationProblem& problem) {
  if (problem.mode() != Mode::strong)
    throw std::invalid_argument("closed form solver requires strong-constraint mode");
  const auto* linear =
      dynamic_cast<const BandwiseLinearDynamics*>(&problem.dynamics());
  if (!linear)
    throw std::invalid_argument("closed form solver requires bandwise linear dynamics");

  const Index k = linear->blocks();
  const Index n_var = problem.variable_count();
  const Index frames = problem.frames();
  const Index bands = problem.bands();
  const Matrix& transition = linear->transition();

  // s_{v,t}[l] = (o M^t) xi_{v,l} per band l; precompute the observation rows.
  std::vector<Eigen::RowVectorXd> obs_rows(static_cast<std::size_t>(frames));
  obs_rows[0] = linear->observation();
  for (Index t = 1; t < frames; ++t)
    obs_rows[static_cast<std::size_t>(t)] = obs_rows[static_cast<std::size_t>(t - 1)] * transition;

  Matrix row_gram = Matrix::Zero(k, k);  // sum_t m_t' m_t
  for (const auto& m : obs_rows) row_gram += m.transpose() * m;

  // Normal matrix: H[(v,i),(w,j)] = gram(v,w) * row_gram(i,j).
  const Index dim = n_var * k;
  Matrix h(dim, dim);
  for (Index v = 0; v < n_var; ++v)
    for (Index w = 0; w < n_var; ++w)
      h.block(v * k, w * k, k, k) = problem.gram()(v, w) * row_gram;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const double max_eig = eig.eigenvalues().maxCoeff();
  const double min_eig = eig.eigenvalues().minCoeff();
  if (!(min_eig > max_eig * 1e-13))
    throw NumericError(
        "closed form solver: singular normal matrix (eigenvalue ratio " +
        std::to_string(min_eig / max_eig) + ")");

  // Right-hand side for every band at once: B[(v,i), l] = sum_t m_t[i] c_{v,t}[l].
  Matrix rhs = Matrix::Zero(dim, bands);
  for (Index t = 0; t < frames; ++t) {
    const Matrix& proj = problem.projected()[static_cast<std::size_t>(t)];  // L x V
    const auto& m = obs_rows[static_cast<std::size_t>(t)];
    for (Index v = 0; v < n_var; ++v)
      rhs.block(v * k, 0, k, bands) += m.transpose() * proj.col(v).transpose();
  }

  const Matrix solution = eig.eigenvectors() *
                          (eig.eigenvalues().cwiseInverse().asDiagonal() *
                           (eig.eigenvectors().transpose() * rhs));

  Vector x(problem.initial_dim());
  for (Index v = 0; v < n_var; ++v)
    for (Index j = 0; j < k; ++j)
      x.segment(v * k * bands + j * bands, bands) = solution.row(v * k + j);

  AssimilationResult result;
  result.initial_state = x;
  result.trajectory =
      forward_propagate(split_states(problem, x), problem.dynamics(), frames);
  result.objective_history.push_back(objective(problem, x));
  result.converged = true;
  result.iterations = 0;
  return result;
}

VcaInitialization initialize_from_vca(const ImageSequence& observations, Index endmembers,
                                      bool frame0_only, Rng& rng) {
  Matrix data;
  if (frame0_only) {
    data = observations.frame(0);
  } else {
    data.resize(observations.bands(), observations.pixels() * observations.size());
    for (Index t = 0; t < observations.size(); ++t)
      data.middleCols(t * observations.pixels(), observations.pixels()) =
          observations.frame(t);
  }
  EndmemberMatrix extracted = unmix::vca_extract(data, endmembers, rng);
  AbundanceMatrix abundances = unmix::fcls_abundances(observations.frame(0), extracted);
  return VcaInitialization{std::move(abundances), std::move(extracted)};
}

Vector make_initial_guess(const AssimilationProblem& problem,
                          const Matrix& endmember_estimates) {
  require(endmember_estimates.rows() == problem.bands(),
          "make_initial_guess: band count mismatch");
  require(endmember_estimates.cols() == problem.variable_count(),
          "make_initial_guess: one estimate column per variable endmember");

  const Index dim = problem.state_dim();
  const Index bands = problem.bands();
  Vector guess = Vector::Zero(problem.initial_dim());

  // Place the estimate in the last observed block (the static one when the
  // model tracks a mean; the position otherwise). Velocity blocks stay zero.
  Index target_block = 0;
  double weight = 1.0;
  if (const auto* linear =
          dynamic_cast<const BandwiseLinearDynamics*>(&problem.dynamics())) {
    for (Index j = 0; j < linear->observation().size(); ++j) {
      if (linear->observation()[j] != 0.0) {
        target_block = j;
        weight = linear->observation()[j];
      }
    }
  }
  for (Index v = 0; v < problem.variable_count(); ++v)
    guess.segment(v * dim + target_block * bands, bands) =
        endmember_estimates.col(v) / weight;
  return guess;
}

}  // namespace hsdyn::assim
