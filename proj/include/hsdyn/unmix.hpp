#pragma once

#include <utility>
#include <vector>

#include "hsdyn/rng.hpp"
#include "hsdyn/types.hpp"

namespace hsdyn::unmix {

/// Per-frame column permutations produced by the alignment step.
/// aligned.frame(t).col(j) == original.frame(t).col(perms[t][j]).
struct AlignmentMap {
  std::vector<std::vector<Index>> perms;
};

/// Vertex component analysis endmember extraction: SNR-dependent subspace
/// projection followed by iterative orthogonal-projection maximization.
/// Deterministic for a fixed generator state.
EndmemberMatrix vca_extract(const Matrix& frame, Index endmembers, Rng& rng);

/// Per-pixel least squares on the probability simplex
/// (min ||y - S a||^2 s.t. a >= 0, sum a = 1), solved by an active-set
/// method to KKT residual 1e-8. Pixels are solved independently.
AbundanceMatrix fcls_abundances(const Matrix& frame, const EndmemberMatrix& endmembers);

/// Single-pixel variant.
Vector fcls_pixel(const Vector& pixel, const Matrix& endmembers);

/// Exact minimum-cost assignment (Hungarian method). cost is square;
/// returns row -> column assignment.
std::vector<Index> min_cost_assignment(const Matrix& cost);

/// Chains frames to the first one by minimum total spectral angle.
std::pair<SpectralSeries, AlignmentMap> align_endmembers(const SpectralSeries& series);

/// Matches estimate columns to reference columns by spectral angle;
/// returns m with estimate.col(m[j]) corresponding to reference.col(j).
std::vector<Index> match_columns(const Matrix& estimate, const Matrix& reference);

/// Per-frame spectral RMSE of endmember p.
std::vector<double> trajectory_rmse(const SpectralSeries& estimate,
                                    const SpectralSeries& truth, Index p);

/// Same, with a common static part subtracted from both series first
/// (the value is unchanged; the overload documents the variable-part view).
std::vector<double> trajectory_rmse(const SpectralSeries& estimate,
                                    const SpectralSeries& truth, Index p,
                                    const Vector& static_part);

}  // namespace hsdyn::unmix
