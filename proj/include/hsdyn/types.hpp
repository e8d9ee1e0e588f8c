#pragma once

#include <Eigen/Dense>
#include <vector>

namespace hsdyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Reflectance signature over the spectral bands. Entries must be finite.
class Spectrum {
 public:
  explicit Spectrum(Vector values);

  const Vector& values() const { return values_; }
  Index bands() const { return values_.size(); }

 private:
  Vector values_;
};

/// L x P matrix whose columns are the endmember signatures of one frame.
class EndmemberMatrix {
 public:
  explicit EndmemberMatrix(Matrix columns);

  const Matrix& matrix() const { return m_; }
  Index bands() const { return m_.rows(); }
  Index count() const { return m_.cols(); }
  Vector column(Index p) const { return m_.col(p); }

 private:
  Matrix m_;
};

/// Time-indexed endmember matrices sharing (L, P), with strictly increasing
/// timestamps (frame index or hours).
class SpectralSeries {
 public:
  SpectralSeries(std::vector<Matrix> frames, std::vector<double> timestamps);

  Index size() const { return static_cast<Index>(frames_.size()); }
  Index bands() const { return frames_.front().rows(); }
  Index count() const { return frames_.front().cols(); }
  const Matrix& frame(Index t) const { return frames_.at(static_cast<std::size_t>(t)); }
  const std::vector<Matrix>& frames() const { return frames_; }
  const std::vector<double>& timestamps() const { return timestamps_; }

 private:
  std::vector<Matrix> frames_;
  std::vector<double> timestamps_;
};

/// P x N abundances: nonnegative, every pixel column sums to one.
/// Entries above -1e-12 are clamped to zero; larger violations are rejected.
class AbundanceMatrix {
 public:
  explicit AbundanceMatrix(Matrix entries);

  const Matrix& matrix() const { return m_; }
  Index count() const { return m_.rows(); }   // P
  Index pixels() const { return m_.cols(); }  // N

  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kNegativeTolerance = -1e-12;

 private:
  Matrix m_;
};

/// T frames of L x N at-sensor observations with per-frame noise levels.
class ImageSequence {
 public:
  ImageSequence(std::vector<Matrix> frames, std::vector<double> noise_sigma,
                std::vector<double> timestamps);

  Index size() const { return static_cast<Index>(frames_.size()); }
  Index bands() const { return frames_.front().rows(); }
  Index pixels() const { return frames_.front().cols(); }
  const Matrix& frame(Index t) const { return frames_.at(static_cast<std::size_t>(t)); }
  const std::vector<Matrix>& frames() const { return frames_; }
  const std::vector<double>& noise_sigma() const { return noise_sigma_; }
  const std::vector<double>& timestamps() const { return timestamps_; }

 private:
  std::vector<Matrix> frames_;
  std::vector<double> noise_sigma_;
  std::vector<double> timestamps_;
};

/// Position/velocity pair used by second order dynamics; both length L.
class AugmentedState {
 public:
  AugmentedState(Vector position, Vector velocity);

  const Vector& position() const { return position_; }
  const Vector& velocity() const { return velocity_; }
  Index bands() const { return position_.size(); }

  /// Stacked [position; velocity] vector.
  Vector stacked() const;
  static AugmentedState from_stacked(const Vector& stacked);

 private:
  Vector position_;
  Vector velocity_;
};

/// (1/sqrt(L)) * ||estimate - truth||_2
double spectral_rmse(const Vector& estimate, const Vector& truth);
double spectral_rmse(const Spectrum& estimate, const Spectrum& truth);

/// arccos of the normalized inner product; brightness invariant.
double spectral_angle(const Vector& a, const Vector& b);

}  // namespace hsdyn
