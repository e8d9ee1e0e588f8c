#include "hsdyn/simulate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hsdyn/dynamics.hpp"
#include "hsdyn/errors.hpp"

namespace hsdyn::sim {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void ScenarioAConfig::validate() const {
  require(bands >= 1 && endmembers >= 1 && pixels >= 1 && frames >= 1,
          "scenario A: L, P, N, T must be >= 1");
  require(std::isfinite(snr_db), "scenario A: snr_db must be finite");
  require(std::isfinite(beta), "scenario A: beta must be finite");
  require(variable_index >= 0 && variable_index < endmembers,
          "scenario A: variable endmember index out of range");
  require(variable_amplitude > 0.0, "scenario A: variable_amplitude must be > 0");
  if (!dirichlet_alpha.empty()) {
    require(static_cast<Index>(dirichlet_alpha.size()) == endmembers,
            "scenario A: dirichlet_alpha length must equal P");
    for (double a : dirichlet_alpha)
      require(a > 0.0, "scenario A: dirichlet_alpha entries must be > 0");
  }
}

void ScenarioBConfig::validate() const {
  require(bands >= 1 && endmembers >= 1 && frames >= 1,
          "scenario B: L, P, T must be >= 1");
  require(train_frames >= 1 && train_frames < frames,
          "scenario B: train_frames must be in [1, T)");
  require(emergence_deg >= 0.0 && emergence_deg < 90.0,
          "scenario B: emergence angle must be in [0, 90)");
  require(tau_hours > 0.0 && duration_hours > 0.0,
          "scenario B: tau and duration must be > 0");
  require(std::isfinite(snr_db), "scenario B: snr_db must be finite");
  require(pixels >= 1, "scenario B: N must be >= 1");
  if (angle_law == AngleLaw::scaled)
    require(incidence_amplitude_deg > 0.0 && incidence_amplitude_deg < 90.0,
            "scenario B: incidence amplitude must be in (0, 90)");
  if (!dirichlet_alpha.empty()) {
    require(static_cast<Index>(dirichlet_alpha.size()) == endmembers,
            "scenario B: dirichlet_alpha length must equal P");
    for (double a : dirichlet_alpha)
      require(a > 0.0, "scenario B: dirichlet_alpha entries must be > 0");
  }
}

AlbedoSpectrum::AlbedoSpectrum(Vector values) : values_(std::move(values)) {
  require(values_.size() >= 1, "AlbedoSpectrum: at least one band required");
  for (Index l = 0; l < values_.size(); ++l) {
    require(values_[l] > 0.0 && values_[l] < 1.0,
            "AlbedoSpectrum: albedo must lie strictly inside (0, 1)");
  }
}

Spectrum synth_spectrum(Rng& rng, Index bands) {
  require(bands >= 1, "synth_spectrum: bands must be >= 1");
  Vector v = Vector::Constant(bands, rng.uniform(0.1, 0.5));
  const int bumps = static_cast<int>(rng.uniform_int(3, 6));
  for (int b = 0; b < bumps; ++b) {
    const double center = rng.uniform(0.0, static_cast<double>(bands - 1));
    const double width = rng.uniform(0.03, 0.25) * static_cast<double>(bands);
    const double height = rng.uniform(0.05, 0.45);
    for (Index l = 0; l < bands; ++l) {
      const double z = (static_cast<double>(l) - center) / width;
      v[l] += height * std::exp(-0.5 * z * z);
    }
  }
  v = v.cwiseMax(0.05).cwiseMin(0.95);
  return Spectrum(std::move(v));
}

AbundanceMatrix sample_dirichlet(Rng& rng, const std::vector<double>& alpha, Index n) {
  require(!alpha.empty(), "sample_dirichlet: alpha must be nonempty");
  require(n >= 1, "sample_dirichlet: n must be >= 1");
  for (double a : alpha)
    require(a > 0.0, "sample_dirichlet: alpha entries must be > 0");
  const Index p = static_cast<Index>(alpha.size());
  Matrix m(p, n);
  for (Index j = 0; j < n; ++j) {
    double total = 0.0;
    for (Index i = 0; i < p; ++i) {
      m(i, j) = rng.gamma(alpha[static_cast<std::size_t>(i)]);
      total += m(i, j);
    }
    m.col(j) /= total;
  }
  return AbundanceMatrix(std::move(m));
}

std::pair<Matrix, double> add_awgn_snr(const Matrix& signal, double snr_db, Rng& rng) {
  require(signal.size() >= 1, "add_awgn_snr: empty signal");
  require(std::isfinite(snr_db), "add_awgn_snr: snr_db must be finite");
  const double power = signal.squaredNorm() / static_cast<double>(signal.size());
  if (power <= 0.0)
    throw std::invalid_argument("add_awgn_snr: all-zero signal has undefined SNR");
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Matrix noisy = signal;
  for (Index j = 0; j < noisy.cols(); ++j)
    for (Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += sigma * rng.normal();
  return {std::move(noisy), sigma};
}

double hapke_forward_band(double omega, double mu, double mu0) {
  if (!(omega > 0.0 && omega < 1.0))
    throw std::invalid_argument("hapke_forward: albedo must lie in (0, 1)");
  if (!(mu > 0.0 && mu <= 1.0) || !(mu0 > 0.0 && mu0 <= 1.0))
    throw std::invalid_argument("hapke_forward: cosines must lie in (0, 1]");
  const double x = std::sqrt(1.0 - omega);
  return omega / ((1.0 + 2.0 * mu * x) * (1.0 + 2.0 * mu0 * x));
}

Spectrum hapke_forward(const AlbedoSpectrum& omega, double mu, double mu0) {
  Vector out(omega.bands());
  for (Index l = 0; l < out.size(); ++l)
    out[l] = hapke_forward_band(omega.values()[l], mu, mu0);
  return Spectrum(std::move(out));
}

double hapke_invert_band(double reflectance, double mu, double mu0, Index band) {
  if (!(reflectance > 0.0 && reflectance < 1.0)) {
    throw NumericError("hapke_invert: reflectance outside (0, 1) at band " +
                       std::to_string(band));
  }
  if (!(mu > 0.0 && mu <= 1.0) || !(mu0 > 0.0 && mu0 <= 1.0))
    throw std::invalid_argument("hapke_invert: cosines must lie in (0, 1]");
  // Substituting x = sqrt(1 - omega) turns the reflectance model into
  // (4 r mu mu0 + 1) x^2 + 2 r (mu + mu0) x + (r - 1) = 0.
  const double r = reflectance;
  const double a = 4.0 * r * mu * mu0 + 1.0;
  const double b = 2.0 * r * (mu + mu0);
  const double c = r - 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0)
    throw NumericError("hapke_invert: no real root at band " + std::to_string(band));
  // c <= 0 and b >= 0, so the nonnegative root is 2c / (-b - sqrt(disc)),
  // which avoids the cancellation in (-b + sqrt(disc)) / 2a.
  const double x = 2.0 * c / (-b - std::sqrt(disc));
  if (!(x >= 0.0 && x <= 1.0))
    throw NumericError("hapke_invert: no root in [0, 1] at band " + std::to_string(band));
  const double omega = 1.0 - x * x;
  if (!(omega > 0.0 && omega < 1.0))
    throw NumericError("hapke_invert: albedo outside (0, 1) at band " +
                       std::to_string(band));
  return omega;
}

AlbedoSpectrum hapke_invert(const Spectrum& reflectance, double mu, double mu0) {
  Vector out(reflectance.bands());
  for (Index l = 0; l < out.size(); ++l)
    out[l] = hapke_invert_band(reflectance.values()[l], mu, mu0, l);
  return AlbedoSpectrum(std::move(out));
}

ScenarioAData generate_scenario_a(const ScenarioAConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  Matrix means(cfg.bands, cfg.endmembers);
  for (Index p = 0; p < cfg.endmembers; ++p)
    means.col(p) = synth_spectrum(rng, cfg.bands).values();

  // Oscillating part: smooth shape scaled down, velocity a small random vector.
  Vector dev0 = cfg.variable_amplitude * synth_spectrum(rng, cfg.bands).values();
  const double dev_centered =
      std::sqrt((dev0.array() - dev0.mean()).square().sum() /
                static_cast<double>(cfg.bands));
  Vector vel0(cfg.bands);
  const double vel_std = 0.1 * (dev_centered > 0.0 ? dev_centered : cfg.variable_amplitude);
  for (Index l = 0; l < cfg.bands; ++l) vel0[l] = vel_std * rng.normal();

  const Eigen::Matrix2d flow = second_order_transition(cfg.beta, 1.0);

  std::vector<Matrix> truth_frames;
  truth_frames.reserve(static_cast<std::size_t>(cfg.frames));
  std::vector<double> timestamps(static_cast<std::size_t>(cfg.frames));
  Vector dev = dev0;
  Vector vel = vel0;
  for (Index t = 0; t < cfg.frames; ++t) {
    timestamps[static_cast<std::size_t>(t)] = static_cast<double>(t);
    Matrix frame = means;
    frame.col(cfg.variable_index) += dev;
    truth_frames.push_back(std::move(frame));
    Vector next_dev = flow(0, 0) * dev + flow(0, 1) * vel;
    Vector next_vel = flow(1, 0) * dev + flow(1, 1) * vel;
    dev = std::move(next_dev);
    vel = std::move(next_vel);
  }

  std::vector<double> alpha = cfg.dirichlet_alpha;
  if (alpha.empty()) alpha.assign(static_cast<std::size_t>(cfg.endmembers), 1.0);
  AbundanceMatrix abundances = sample_dirichlet(rng, alpha, cfg.pixels);

  std::vector<Matrix> obs_frames;
  obs_frames.reserve(truth_frames.size());
  std::vector<double> sigmas(truth_frames.size());
  for (std::size_t t = 0; t < truth_frames.size(); ++t) {
    Matrix clean = truth_frames[t] * abundances.matrix();
    auto [noisy, sigma] = add_awgn_snr(clean, cfg.snr_db, rng);
    obs_frames.push_back(std::move(noisy));
    sigmas[t] = sigma;
  }

  return ScenarioAData{
      ImageSequence(std::move(obs_frames), std::move(sigmas), timestamps),
      SpectralSeries(std::move(truth_frames), timestamps),
      std::move(abundances),
      EndmemberMatrix(std::move(means)),
      AugmentedState(std::move(dev0), std::move(vel0)),
      cfg};
}

double incidence_angle_rad(const ScenarioBConfig& cfg, double t_hours) {
  const double phase = std::cos(2.0 * std::numbers::pi * t_hours / cfg.tau_hours);
  if (cfg.angle_law == ScenarioBConfig::AngleLaw::literal) return phase;
  return cfg.incidence_amplitude_deg * kDegToRad * phase;
}

std::vector<AlbedoSpectrum> albedos_from_reflectance(const EndmemberMatrix& spectra,
                                                     double mu, double mu0) {
  std::vector<AlbedoSpectrum> out;
  out.reserve(static_cast<std::size_t>(spectra.count()));
  for (Index p = 0; p < spectra.count(); ++p)
    out.push_back(hapke_invert(Spectrum(spectra.column(p)), mu, mu0));
  return out;
}

ScenarioBData generate_scenario_b(const ScenarioBConfig& cfg,
                                  const std::vector<AlbedoSpectrum>& albedos,
                                  const std::optional<AbundanceMatrix>& abundances) {
  cfg.validate();
  require(static_cast<Index>(albedos.size()) == cfg.endmembers,
          "scenario B: one albedo spectrum per endmember required");
  for (const auto& a : albedos)
    require(a.bands() == cfg.bands, "scenario B: albedo band count mismatch");

  const double mu = std::cos(cfg.emergence_deg * kDegToRad);

  std::vector<double> timestamps(static_cast<std::size_t>(cfg.frames));
  std::vector<double> mu0(static_cast<std::size_t>(cfg.frames));
  const double dt = cfg.frames > 1
                        ? cfg.duration_hours / static_cast<double>(cfg.frames - 1)
                        : 0.0;
  for (Index t = 0; t < cfg.frames; ++t) {
    const double hours = static_cast<double>(t) * dt;
    timestamps[static_cast<std::size_t>(t)] = hours;
    const double theta0 = incidence_angle_rad(cfg, hours);
    const double c = std::cos(theta0);
    if (!(c > 0.0 && c <= 1.0))
      throw NumericError("scenario B: incidence cosine outside (0, 1] at frame " +
                         std::to_string(t));
    mu0[static_cast<std::size_t>(t)] = c;
  }

  std::vector<Matrix> pure_frames;
  pure_frames.reserve(static_cast<std::size_t>(cfg.frames));
  for (Index t = 0; t < cfg.frames; ++t) {
    Matrix frame(cfg.bands, cfg.endmembers);
    for (Index p = 0; p < cfg.endmembers; ++p) {
      frame.col(p) =
          hapke_forward(albedos[static_cast<std::size_t>(p)], mu,
                        mu0[static_cast<std::size_t>(t)])
              .values();
    }
    pure_frames.push_back(std::move(frame));
  }

  std::vector<Index> train_idx, test_idx;
  for (Index t = 0; t < cfg.frames; ++t)
    (t < cfg.train_frames ? train_idx : test_idx).push_back(t);

  Matrix albedo_matrix(cfg.bands, cfg.endmembers);
  for (Index p = 0; p < cfg.endmembers; ++p)
    albedo_matrix.col(p) = albedos[static_cast<std::size_t>(p)].values();

  std::optional<ImageSequence> observations;
  if (abundances.has_value()) {
    require(abundances->count() == cfg.endmembers,
            "scenario B: abundance row count must equal P");
    Rng rng = Rng(cfg.seed).fork(0x0b5e);
    std::vector<Matrix> obs_frames;
    obs_frames.reserve(pure_frames.size());
    std::vector<double> sigmas(pure_frames.size());
    for (std::size_t t = 0; t < pure_frames.size(); ++t) {
      Matrix clean = pure_frames[t] * abundances->matrix();
      auto [noisy, sigma] = add_awgn_snr(clean, cfg.snr_db, rng);
      obs_frames.push_back(std::move(noisy));
      sigmas[t] = sigma;
    }
    observations = ImageSequence(std::move(obs_frames), std::move(sigmas), timestamps);
  }

  return ScenarioBData{SpectralSeries(std::move(pure_frames), timestamps),
                       std::move(train_idx),
                       std::move(test_idx),
                       EndmemberMatrix(std::move(albedo_matrix)),
                       std::move(mu0),
                       mu,
                       std::move(observations),
                       abundances,
                       cfg};
}

ScenarioBData generate_scenario_b(const ScenarioBConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  Matrix reflectance(cfg.bands, cfg.endmembers);
  for (Index p = 0; p < cfg.endmembers; ++p)
    reflectance.col(p) = synth_spectrum(rng, cfg.bands).values();

  const double mu = std::cos(cfg.emergence_deg * kDegToRad);
  const double mu0_ref = std::cos(incidence_angle_rad(cfg, 0.0));
  auto albedos = albedos_from_reflectance(EndmemberMatrix(reflectance), mu, mu0_ref);

  std::vector<double> alpha = cfg.dirichlet_alpha;
  if (alpha.empty()) alpha.assign(static_cast<std::size_t>(cfg.endmembers), 1.0);
  AbundanceMatrix abundances = sample_dirichlet(rng, alpha, cfg.pixels);

  return generate_scenario_b(cfg, albedos, abundances);
}

}  // namespace hsdyn::sim
