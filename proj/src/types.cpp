#include "hsdyn/types.hpp"

#include <cmath>
#include <stdexcept>

namespace hsdyn {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Spectrum::Spectrum(Vector values) : values_(std::move(values)) {
  require(values_.size() >= 1, "Spectrum: at least one band required");
  require(values_.allFinite(), "Spectrum: values must be finite");
}

EndmemberMatrix::EndmemberMatrix(Matrix columns) : m_(std::move(columns)) {
  require(m_.rows() >= 1, "EndmemberMatrix: at least one band required");
  require(m_.cols() >= 1, "EndmemberMatrix: at least one endmember required");
  require(m_.allFinite(), "EndmemberMatrix: entries must be finite");
}

SpectralSeries::SpectralSeries(std::vector<Matrix> frames, std::vector<double> timestamps)
    : frames_(std::move(frames)), timestamps_(std::move(timestamps)) {
  require(!frames_.empty(), "SpectralSeries: at least one frame required");
  require(frames_.size() == timestamps_.size(),
          "SpectralSeries: one timestamp per frame required");
  const Index rows = frames_.front().rows();
  const Index cols = frames_.front().cols();
  require(rows >= 1 && cols >= 1, "SpectralSeries: empty frames");
  for (const auto& f : frames_) {
    require(f.rows() == rows && f.cols() == cols,
            "SpectralSeries: all frames must share (L, P)");
    require(f.allFinite(), "SpectralSeries: entries must be finite");
  }
  for (std::size_t t = 1; t < timestamps_.size(); ++t) {
    require(timestamps_[t] > timestamps_[t - 1],
            "SpectralSeries: timestamps must be strictly increasing");
  }
}

AbundanceMatrix::AbundanceMatrix(Matrix entries) : m_(std::move(entries)) {
  require(m_.rows() >= 1 && m_.cols() >= 1, "AbundanceMatrix: empty matrix");
  require(m_.allFinite(), "AbundanceMatrix: entries must be finite");
  for (Index j = 0; j < m_.cols(); ++j) {
    for (Index i = 0; i < m_.rows(); ++i) {
      double v = m_(i, j);
      if (v < 0.0) {
        require(v >= kNegativeTolerance, "AbundanceMatrix: negative abundance");
        m_(i, j) = 0.0;
      }
    }
    const double sum = m_.col(j).sum();
    require(std::abs(sum - 1.0) <= kSumTolerance,
            "AbundanceMatrix: column must sum to one");
  }
}

ImageSequence::ImageSequence(std::vector<Matrix> frames, std::vector<double> noise_sigma,
                             std::vector<double> timestamps)
    : frames_(std::move(frames)),
      noise_sigma_(std::move(noise_sigma)),
      timestamps_(std::move(timestamps)) {
  require(!frames_.empty(), "ImageSequence: at least one frame required");
  require(frames_.size() == noise_sigma_.size(),
          "ImageSequence: one noise level per frame required");
  require(frames_.size() == timestamps_.size(),
          "ImageSequence: one timestamp per frame required");
  const Index rows = frames_.front().rows();
  const Index cols = frames_.front().cols();
  for (const auto& f : frames_) {
    require(f.rows() == rows && f.cols() == cols,
            "ImageSequence: all frames must share (L, N)");
  }
}

AugmentedState::AugmentedState(Vector position, Vector velocity)
    : position_(std::move(position)), velocity_(std::move(velocity)) {
  require(position_.size() == velocity_.size(),
          "AugmentedState: position and velocity must have equal length");
  require(position_.size() >= 1, "AugmentedState: empty state");
  require(position_.allFinite() && velocity_.allFinite(),
          "AugmentedState: entries must be finite");
}

Vector AugmentedState::stacked() const {
  Vector out(2 * position_.size());
  out << position_, velocity_;
  return out;
}

AugmentedState AugmentedState::from_stacked(const Vector& stacked) {
  require(stacked.size() % 2 == 0, "AugmentedState: stacked size must be even");
  const Index half = stacked.size() / 2;
  return AugmentedState(stacked.head(half), stacked.tail(half));
}

double spectral_rmse(const Vector& estimate, const Vector& truth) {
  require(estimate.size() == truth.size(), "spectral_rmse: length mismatch");
  require(estimate.size() >= 1, "spectral_rmse: empty spectra");
  return (estimate - truth).norm() / std::sqrt(static_cast<double>(estimate.size()));
}

double spectral_rmse(const Spectrum& estimate, const Spectrum& truth) {
  return spectral_rmse(estimate.values(), truth.values());
}

double spectral_angle(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "spectral_angle: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, "spectral_angle: zero norm spectrum");
  double c = a.dot(b) / (na * nb);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace hsdyn
