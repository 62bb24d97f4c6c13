#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace dualrail {

/// GaussianT2:    F = (2 exp(-(t/T2)^2) + exp(-t/T1) + 1) / 4
/// ExponentialT2: F = (2 exp(-t/T2)     + exp(-t/T1) + 1) / 4
enum class DecayModel { GaussianT2, ExponentialT2 };

DecayModel parse_decay_model(std::string_view name);
std::string_view decay_model_name(DecayModel model);

struct DecayPoint {
  double tau = 0.0;  // us
  double value = 0.0;
};

struct FitOptions {
  std::optional<double> fixed_t1;  // us; joint fit when empty
};

/// Times may be +infinity (no measurable decay). Variances are NaN for
/// parameters that are fixed or unbounded.
struct DecayFit {
  DecayModel model = DecayModel::GaussianT2;
  double t2 = 0.0;  // T2 or T2p
  double t1 = 0.0;
  bool t1_fixed = false;
  double residual = 0.0;  // RMS
  std::array<double, 2> covariance_diag{};  // (T2, T1), us^2
};

double decay_model_value(DecayModel model, double tau, double t2, double t1);

/// Log-spaced grid (in units of the largest tau) then coordinate-wise
/// golden-section refinement. Deterministic.
DecayFit fit_decay(std::span<const DecayPoint> points, DecayModel model, const FitOptions& opts = {});

/// T1 from a curve following exp(-t/T1): least squares on -log(value) through
/// the origin. Returns +infinity when no decay is resolved.
double fit_relaxation_time(std::span<const DecayPoint> points);

/// <Z_L>(t) = 1 - exp(-t/T1) - exp(-t/T2p) cos(omega t)
double ramsey_model_value(double tau, double omega, double t2p, double t1);

/// Ramsey envelope fit at known detuning; the result's model is ExponentialT2.
DecayFit fit_ramsey(std::span<const DecayPoint> points, double omega, const FitOptions& opts = {});

}  // namespace dualrail
