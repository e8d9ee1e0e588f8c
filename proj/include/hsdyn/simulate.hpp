#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "hsdyn/rng.hpp"
#include "hsdyn/types.hpp"

namespace hsdyn::sim {

/// Mixed-image experiment: one endmember oscillates about a static mean,
/// abundances are Dirichlet, observations carry SNR-calibrated noise.
struct ScenarioAConfig {
  Index bands = 224;        // L
  Index endmembers = 5;     // P
  Index pixels = 500;       // N
  Index frames = 20;        // T
  double beta = -0.1;
  double snr_db = 20.0;
  std::vector<double> dirichlet_alpha;  // empty => all ones, length P
  Index variable_index = 0;
  // Scale of the oscillating part relative to a unit synthetic spectrum; the
  // variable part stays small compared to the mean.
  double variable_amplitude = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pure-pixel experiment: reflectance of every material follows the Hapke
/// model under a time-varying incidence angle; first frames train, rest test.
struct ScenarioBConfig {
  Index bands = 50;         // L
  Index endmembers = 4;     // P
  Index frames = 30;        // T
  Index train_frames = 20;
  double emergence_deg = 30.0;
  double tau_hours = 24.0;
  double duration_hours = 3.0;
  double snr_db = 30.0;
  // "literal": incidence angle in radians equals cos(2 pi t / tau).
  // "scaled": incidence angle in degrees equals amplitude * cos(2 pi t / tau).
  enum class AngleLaw { literal, scaled };
  AngleLaw angle_law = AngleLaw::literal;
  double incidence_amplitude_deg = 45.0;  // used by the scaled law only
  Index pixels = 500;       // N, for the optional mixed images
  std::vector<double> dirichlet_alpha;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Single-scattering albedo per band, strictly inside (0, 1).
class AlbedoSpectrum {
 public:
  explicit AlbedoSpectrum(Vector values);
  const Vector& values() const { return values_; }
  Index bands() const { return values_.size(); }

 private:
  Vector values_;
};

/// Smooth synthetic reflectance: random mixture of Gaussian bumps plus an
/// offset, clipped to [0.05, 0.95]. Stands in for a spectral-library lookup.
Spectrum synth_spectrum(Rng& rng, Index bands);

/// P x N abundances with independent Dirichlet(alpha) columns.
AbundanceMatrix sample_dirichlet(Rng& rng, const std::vector<double>& alpha, Index n);

/// Adds white Gaussian noise calibrated so that mean(signal^2) / sigma^2
/// equals the target SNR. Returns the noisy matrix and the sigma used.
std::pair<Matrix, double> add_awgn_snr(const Matrix& signal, double snr_db, Rng& rng);

/// Reflectance from albedo under illumination/viewing cosines mu0, mu.
Spectrum hapke_forward(const AlbedoSpectrum& omega, double mu, double mu0);
double hapke_forward_band(double omega, double mu, double mu0);

/// Exact per-band inversion of `hapke_forward` (quadratic in sqrt(1-omega)).
AlbedoSpectrum hapke_invert(const Spectrum& reflectance, double mu, double mu0);
double hapke_invert_band(double reflectance, double mu, double mu0, Index band = -1);

struct ScenarioAData {
  ImageSequence observations;
  SpectralSeries truth;             // noiseless endmember trajectories, L x P
  AbundanceMatrix abundances;
  EndmemberMatrix mean_endmembers;  // static part of every endmember
  AugmentedState variable_initial;  // initial deviation and velocity actually used
  ScenarioAConfig config;
};

ScenarioAData generate_scenario_a(const ScenarioAConfig& cfg);

struct ScenarioBData {
  SpectralSeries pure_series;       // noiseless pure-pixel trajectories, L x P
  std::vector<Index> train_indices;
  std::vector<Index> test_indices;
  EndmemberMatrix albedos;          // L x P albedo columns
  std::vector<double> incidence_cos;  // mu0(t) per frame
  double emergence_cos = 1.0;       // mu
  std::optional<ImageSequence> observations;  // mixed noisy images
  std::optional<AbundanceMatrix> abundances;
  ScenarioBConfig config;
};

/// Incidence angle in radians at time t (hours) under the configured law.
double incidence_angle_rad(const ScenarioBConfig& cfg, double t_hours);

/// Pure-pixel series from explicit albedos; mixes noisy images when
/// abundances are supplied.
ScenarioBData generate_scenario_b(const ScenarioBConfig& cfg,
                                  const std::vector<AlbedoSpectrum>& albedos,
                                  const std::optional<AbundanceMatrix>& abundances);

/// Convenience: synthesizes reflectance endmembers, inverts them to albedos
/// at the t = 0 geometry, samples Dirichlet abundances and mixes images.
ScenarioBData generate_scenario_b(const ScenarioBConfig& cfg);

/// Albedos recovered from reflectance spectra at a reference geometry.
std::vector<AlbedoSpectrum> albedos_from_reflectance(const EndmemberMatrix& spectra,
                                                     double mu, double mu0);

}  // namespace hsdyn::sim
