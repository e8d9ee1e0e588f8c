#include "hsdyn/unmix.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hsdyn/errors.hpp"

namespace hsdyn::unmix {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Moore-Penrose pseudoinverse of a small matrix.
Matrix pinv(const Matrix& a) {
  return a.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace

EndmemberMatrix vca_extract(const Matrix& frame, Index endmembers, Rng& rng) {
  const Index bands = frame.rows();
  const Index pixels = frame.cols();
  const Index p = endmembers;
  require(p >= 1, "vca_extract: endmember count must be >= 1");
  require(pixels >= p, "vca_extract: need at least P pixels");
  require(frame.allFinite(), "vca_extract: non-finite data");
  require(bands >= p, "vca_extract: need at least P bands");

  const Vector mean = frame.rowwise().mean();
  Matrix centered = frame.colwise() - mean;

  // Signal subspace of the centered data.
  Eigen::BDCSVD<Matrix> svd_centered(centered, Eigen::ComputeThinU);
  const Vector& sv = svd_centered.singularValues();
  if (p >= 2) {
    const double tol = std::max(bands, pixels) * sv[0] *
                       std::numeric_limits<double>::epsilon();
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
      if (sv[i] > tol) ++rank;
    if (rank < p - 1)
      throw NumericError("vca_extract: data rank " + std::to_string(rank) +
                         " below P-1; simplex is degenerate");
  }

  // SNR estimate from the power captured by the P-dimensional subspace.
  const Index dim_snr = std::min(p, sv.size());
  Matrix u_snr = svd_centered.matrixU().leftCols(dim_snr);
  Matrix proj_snr = u_snr.transpose() * centered;
  const double n = static_cast<double>(pixels);
  const double power_total = frame.squaredNorm() / n;
  const double power_signal = proj_snr.squaredNorm() / n + mean.squaredNorm();
  const double residual = power_total - power_signal;
  double snr_db;
  if (residual <= power_total * 1e-12) {
    snr_db = std::numeric_limits<double>::infinity();
  } else {
    const double num =
        power_signal - (static_cast<double>(p) / static_cast<double>(bands)) * power_total;
    snr_db = num <= 0.0 ? -std::numeric_limits<double>::infinity()
                        : 10.0 * std::log10(num / residual);
  }
  const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(p));

  // Build the projected point cloud y (p x N) and keep what is needed to map
  // selected columns back to the band space.
  Matrix y;         // p x N, points whose extremes are sought
  Matrix back_u;    // bands x d, subspace basis
  Matrix back_x;    // d x N, subspace coordinates of every pixel
  bool projective;

  if (p == 1 || snr_db > snr_threshold) {
    projective = true;
    const Index d = p;
    Eigen::BDCSVD<Matrix> svd_raw(frame, Eigen::ComputeThinU);
    back_u = svd_raw.matrixU().leftCols(d);
    back_x = back_u.transpose() * frame;
    const Vector u = back_x.rowwise().mean() * static_cast<double>(p);
    y.resize(d, pixels);
    for (Index j = 0; j < pixels; ++j) {
      const double denom = back_x.col(j).dot(u);
      if (std::abs(denom) < 1e-12)
        throw NumericError("vca_extract: projective scaling degenerate at pixel " +
                           std::to_string(j));
      y.col(j) = back_x.col(j) / denom;
    }
  } else {
    projective = false;
    const Index d = p - 1;
    back_u = svd_centered.matrixU().leftCols(d);
    back_x = back_u.transpose() * centered;
    const double lift = back_x.colwise().norm().maxCoeff();
    y.resize(p, pixels);
    y.topRows(d) = back_x;
    y.row(d).setConstant(lift);
  }

  // Repeatedly project onto a random direction orthogonal to the simplex
  // facets found so far and take the farthest point.
  Matrix facets = Matrix::Zero(p, p);
  facets(p - 1, 0) = 1.0;
  std::vector<Index> picked(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) {
    Vector w(p);
    for (Index k = 0; k < p; ++k) w[k] = rng.uniform();
    Vector f = w - facets * (pinv(facets) * w);
    const double norm = f.norm();
    if (norm < 1e-12)
      throw NumericError("vca_extract: degenerate orthogonal direction");
    f /= norm;
    Index best = 0;
    double best_val = -1.0;
    for (Index j = 0; j < pixels; ++j) {
      const double v = std::abs(f.dot(y.col(j)));
      if (v > best_val) {
        best_val = v;
        best = j;
      }
    }
    picked[static_cast<std::size_t>(i)] = best;
    facets.col(i) = y.col(best);
  }

  Matrix endm(bands, p);
  for (Index i = 0; i < p; ++i) {
    const Index j = picked[static_cast<std::size_t>(i)];
    if (projective) {
      endm.col(i) = back_u * back_x.col(j);
    } else {
      endm.col(i) = back_u * back_x.col(j) + mean;
    }
  }
  return EndmemberMatrix(std::move(endm));
}

namespace {

constexpr double kKktTol = 1e-8;

// Active-set solve of min ||y - S a||^2 s.t. a >= 0, 1'a = 1,
// on the precomputed normal-equation data Q = S'S, c = S'y.
Vector fcls_active_set(const Matrix& q, const Vector& c) {
  const Index p = q.rows();
  if (p == 1) return Vector::Ones(1);

  Vector a = Vector::Constant(p, 1.0 / static_cast<double>(p));
  std::vector<bool> active(static_cast<std::size_t>(p), false);
  const int max_iter = static_cast<int>(10 * p);

  for (int iter = 0; iter < max_iter; ++iter) {
    std::vector<Index> free_idx;
    for (Index i = 0; i < p; ++i)
      if (!active[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    const Index nf = static_cast<Index>(free_idx.size());

    // Equality-constrained minimizer on the free variables.
    Matrix kkt = Matrix::Zero(nf + 1, nf + 1);
    Vector rhs(nf + 1);
    for (Index r = 0; r < nf; ++r) {
      for (Index s = 0; s < nf; ++s) kkt(r, s) = q(free_idx[r], free_idx[s]);
      kkt(r, nf) = 1.0;
      kkt(nf, r) = 1.0;
      rhs[r] = c[free_idx[r]];
    }
    rhs[nf] = 1.0;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible())
      throw NumericError("fcls: singular KKT system (rank-deficient endmembers?)");
    Vector sol = lu.solve(rhs);
    const double nu = sol[nf];

    double min_z = 0.0;
    for (Index r = 0; r < nf; ++r) min_z = std::min(min_z, sol[r]);

    if (min_z >= -1e-12) {
      Vector candidate = Vector::Zero(p);
      for (Index r = 0; r < nf; ++r) candidate[free_idx[r]] = std::max(sol[r], 0.0);
      // Multipliers of the pinned variables decide optimality.
      Vector grad = q * candidate - c;
      Index worst = -1;
      double worst_mu = -kKktTol;
      for (Index i = 0; i < p; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const double mu = grad[i] + nu;
        if (mu < worst_mu) {
          worst_mu = mu;
          worst = i;
        }
      }
      if (worst < 0) return candidate;
      active[static_cast<std::size_t>(worst)] = false;
      a = candidate;
      continue;
    }

    // Step toward the equality minimizer until the first variable hits zero.
    double alpha = 1.0;
    Index blocker = -1;
    for (Index r = 0; r < nf; ++r) {
      const Index i = free_idx[r];
      const double dir = sol[r] - a[i];
      if (dir < -1e-15) {
        const double step = -a[i] / dir;
        if (step < alpha) {
          alpha = step;
          blocker = i;
        }
      }
    }
    for (Index r = 0; r < nf; ++r) {
      const Index i = free_idx[r];
      a[i] += alpha * (sol[r] - a[i]);
      if (a[i] < 0.0) a[i] = 0.0;
    }
    if (blocker >= 0) {
      a[blocker] = 0.0;
      active[static_cast<std::size_t>(blocker)] = true;
    }
  }
  throw NumericError("fcls: active-set iteration cap exceeded");
}

}  // namespace

Vector fcls_pixel(const Vector& pixel, const Matrix& endmembers) {
  require(pixel.size() == endmembers.rows(), "fcls: pixel length mismatch");
  const Matrix q = endmembers.transpose() * endmembers;
  const Vector c = endmembers.transpose() * pixel;
  return fcls_active_set(q, c);
}

AbundanceMatrix fcls_abundances(const Matrix& frame, const EndmemberMatrix& endmembers) {
  const Matrix& s = endmembers.matrix();
  require(frame.rows() == s.rows(), "fcls: band count mismatch");
  require(frame.allFinite(), "fcls: non-finite data");

  Eigen::ColPivHouseholderQR<Matrix> qr(s);
  qr.setThreshold(1e-10);
  if (qr.rank() < s.cols())
    throw NumericError("fcls: endmember matrix is rank deficient");

  const Matrix q = s.transpose() * s;
  const Matrix c_all = s.transpose() * frame;  // P x N

  Matrix out(s.cols(), frame.cols());
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < frame.cols(); ++j) {
    out.col(j) = fcls_active_set(q, c_all.col(j));
  }
  return AbundanceMatrix(std::move(out));
}

std::vector<Index> min_cost_assignment(const Matrix& cost) {
  require(cost.rows() == cost.cols() && cost.rows() >= 1,
          "min_cost_assignment: square cost matrix required");
  require(cost.allFinite(), "min_cost_assignment: non-finite costs");
  const Index n = cost.rows();

  // Hungarian method with potentials, O(n^3). Rows/columns are 1-based
  // internally; index 0 is the artificial source of each augmenting pass.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> p(static_cast<std::size_t>(n) + 1, 0);

  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const Index i0 = p[static_cast<std::size_t>(j0)];
      double delta = std::numeric_limits<double>::infinity();
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }

  std::vector<Index> assignment(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j)
    assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

std::pair<SpectralSeries, AlignmentMap> align_endmembers(const SpectralSeries& series) {
  const Index p = series.count();
  const Index frames = series.size();

  AlignmentMap map;
  map.perms.resize(static_cast<std::size_t>(frames));
  std::vector<Matrix> aligned;
  aligned.reserve(static_cast<std::size_t>(frames));

  std::vector<Index> identity(static_cast<std::size_t>(p));
  for (Index i = 0; i < p; ++i) identity[static_cast<std::size_t>(i)] = i;
  map.perms[0] = identity;
  aligned.push_back(series.frame(0));

  for (Index t = 1; t < frames; ++t) {
    const Matrix& prev = aligned.back();
    const Matrix& cur = series.frame(t);
    Matrix cost(p, p);
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j)
        cost(i, j) = spectral_angle(prev.col(i), cur.col(j));
    std::vector<Index> perm = min_cost_assignment(cost);
    Matrix frame(series.bands(), p);
    for (Index i = 0; i < p; ++i) frame.col(i) = cur.col(perm[static_cast<std::size_t>(i)]);
    aligned.push_back(std::move(frame));
    map.perms[static_cast<std::size_t>(t)] = std::move(perm);
  }

  return {SpectralSeries(std::move(aligned), series.timestamps()), std::move(map)};
}

std::vector<Index> match_columns(const Matrix& estimate, const Matrix& reference) {
  require(estimate.rows() == reference.rows() && estimate.cols() == reference.cols(),
          "match_columns: shape mismatch");
  const Index p = estimate.cols();
  Matrix cost(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      cost(i, j) = spectral_angle(reference.col(i), estimate.col(j));
  return min_cost_assignment(cost);
}

std::vector<double> trajectory_rmse(const SpectralSeries& estimate,
                                    const SpectralSeries& truth, Index p) {
  require(estimate.size() == truth.size(), "trajectory_rmse: frame count mismatch");
  require(estimate.bands() == truth.bands(), "trajectory_rmse: band count mismatch");
  require(p >= 0 && p < estimate.count() && p < truth.count(),
          "trajectory_rmse: endmember index out of range");
  std::vector<double> out(static_cast<std::size_t>(estimate.size()));
  for (Index t = 0; t < estimate.size(); ++t)
    out[static_cast<std::size_t>(t)] =
        spectral_rmse(estimate.frame(t).col(p), truth.frame(t).col(p));
  return out;
}

std::vector<double> trajectory_rmse(const SpectralSeries& estimate,
                                    const SpectralSeries& truth, Index p,
                                    const Vector& static_part) {
  require(static_part.size() == estimate.bands(),
          "trajectory_rmse: static part length mismatch");
  std::vector<double> out(static_cast<std::size_t>(estimate.size()));
  for (Index t = 0; t < estimate.size(); ++t)
    out[static_cast<std::size_t>(t)] = spectral_rmse(
        estimate.frame(t).col(p) - static_part, truth.frame(t).col(p) - static_part);
  return out;
}

}  // namespace hsdyn::unmix
