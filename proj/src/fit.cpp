#include "dualrail/fit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dualrail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Grid in u = log(T / tau_max).
constexpr double kGridLo = -4.0;  // T = 0.018 tau_max
constexpr double kGridHi = 6.0;   // T = 403 tau_max
constexpr int kGridPoints = 81;
constexpr double kGolden = 0.6180339887498949;

double decay(double tau, double t) { return std::isinf(t) ? 1.0 : std::exp(-tau / t); }

using Objective = std::function<double(double t2, double t1)>;

struct Optimum {
  double t2, t1, sse;
};

// Golden-section minimum of f on [a, b].
double golden(const std::function<double(double)>& f, double a, double b, double tol) {
  double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Levenberg-Marquardt in log(T) over the finite, free parameters.
Optimum polish(const Objective& sse, const std::function<Eigen::VectorXd(double, double)>& residuals, Optimum best,
               bool t1_free) {
  std::vector<int> free;
  if (std::isfinite(best.t2)) free.push_back(0);
  if (t1_free && std::isfinite(best.t1)) free.push_back(1);
  if (free.empty()) return best;
  const auto p = static_cast<Eigen::Index>(free.size());
  auto unpack = [&](const Eigen::VectorXd& u) {
    double t2 = best.t2, t1 = best.t1;
    for (Eigen::Index c = 0; c < p; ++c) (free[static_cast<std::size_t>(c)] == 0 ? t2 : t1) = std::exp(u(c));
    return std::pair{t2, t1};
  };
  Eigen::VectorXd u(p);
  for (Eigen::Index c = 0; c < p; ++c) u(c) = std::log(free[static_cast<std::size_t>(c)] == 0 ? best.t2 : best.t1);
  double lambda = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    const auto [t2, t1] = unpack(u);
    const Eigen::VectorXd r = residuals(t2, t1);
    Eigen::MatrixXd jac(r.size(), p);
    for (Eigen::Index c = 0; c < p; ++c) {
      constexpr double h = 1e-6;
      Eigen::VectorXd up = u, dn = u;
      up(c) += h;
      dn(c) -= h;
      const auto [a2, a1] = unpack(up);
      const auto [b2, b1] = unpack(dn);
      jac.col(c) = (residuals(a2, a1) - residuals(b2, b1)) / (2 * h);
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * (jtj.diagonal().array() + 1e-300).matrix();
      const Eigen::VectorXd delta = a.ldlt().solve(-g);
      if (!delta.allFinite()) break;
      const Eigen::VectorXd trial = u + delta;
      const auto [c2, c1] = unpack(trial);
      const double v = sse(c2, c1);
      if (v < best.sse) {
        u = trial;
        best = {c2, c1, v};
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (delta.cwiseAbs().maxCoeff() < 1e-12) return best;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }
  return best;
}

Optimum minimize(const Objective& sse, const std::function<Eigen::VectorXd(double, double)>& residuals, double scale,
                 std::optional<double> fixed_t1) {
  const double step = (kGridHi - kGridLo) / (kGridPoints - 1);
  std::vector<double> grid;
  for (int k = 0; k < kGridPoints; ++k) grid.push_back(scale * std::exp(kGridLo + step * k));
  grid.push_back(kInf);

  const std::vector<double> t1_grid = fixed_t1 ? std::vector<double>{*fixed_t1} : grid;
  const auto n2 = static_cast<int>(grid.size()), n1 = static_cast<int>(t1_grid.size());
  std::vector<double> table(static_cast<std::size_t>(n2 * n1));
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n1; ++j) table[static_cast<std::size_t>(i * n1 + j)] = sse(grid[static_cast<std::size_t>(i)], t1_grid[static_cast<std::size_t>(j)]);

  // Local minima of the grid, best first, refine a few of them.
  std::vector<std::pair<double, int>> minima;
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n1; ++j) {
      const double v = table[static_cast<std::size_t>(i * n1 + j)];
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1 && is_min; ++dj) {
          const int a = i + di, b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= n2 || b >= n1) continue;
          if (table[static_cast<std::size_t>(a * n1 + b)] < v) is_min = false;
        }
      if (is_min) minima.emplace_back(v, i * n1 + j);
    }
  std::stable_sort(minima.begin(), minima.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  if (minima.size() > 6) minima.resize(6);

  constexpr double kTol = 1e-7;
  std::optional<Optimum> winner;
  for (const auto& [v0, cell] : minima) {
    Optimum best{grid[static_cast<std::size_t>(cell / n1)], t1_grid[static_cast<std::size_t>(cell % n1)], v0};
    // Coordinate-wise golden-section refinement in log space.
    for (int sweep = 0; sweep < 100; ++sweep) {
      double moved = 0.0;
      if (std::isfinite(best.t2)) {
        const double u0 = std::log(best.t2 / scale);
        const double u = golden([&](double x) { return sse(scale * std::exp(x), best.t1); }, u0 - step, u0 + step, kTol);
        const double v = sse(scale * std::exp(u), best.t1);
        if (v <= best.sse) {
          moved = std::max(moved, std::abs(u - u0));
          best = {scale * std::exp(u), best.t1, v};
        }
      }
      if (!fixed_t1 && std::isfinite(best.t1)) {
        const double u0 = std::log(best.t1 / scale);
        const double u = golden([&](double x) { return sse(best.t2, scale * std::exp(x)); }, u0 - step, u0 + step, kTol);
        const double v = sse(best.t2, scale * std::exp(u));
        if (v <= best.sse) {
          moved = std::max(moved, std::abs(u - u0));
          best = {best.t2, scale * std::exp(u), v};
        }
      }
      if (moved < kTol) break;
    }
    best = polish(sse, residuals, best, !fixed_t1);
    if (!winner || best.sse < winner->sse) winner = best;
  }
  return *winner;
}

void check_points(std::span<const DecayPoint> points, double lo, double hi) {
  if (points.size() < 4) throw std::invalid_argument("fit needs at least 4 points");
  for (const auto& p : points) {
    if (!(p.tau >= 0.0) || !std::isfinite(p.tau)) throw std::invalid_argument("fit tau must be finite and >= 0");
    if (!(p.value >= lo - 1e-9 && p.value <= hi + 1e-9))
      throw std::invalid_argument("fit value " + std::to_string(p.value) + " out of range");
  }
}

// Gauss-Newton variance estimate for the free, finite parameters.
std::array<double, 2> covariance(std::span<const DecayPoint> points, const std::function<double(double, double, double)>& model,
                                 const Optimum& opt, bool t1_free) {
  std::vector<int> free;
  if (std::isfinite(opt.t2)) free.push_back(0);
  if (t1_free && std::isfinite(opt.t1)) free.push_back(1);
  std::array<double, 2> out{kNaN, kNaN};
  const auto m = static_cast<Eigen::Index>(points.size());
  const auto p = static_cast<Eigen::Index>(free.size());
  if (p == 0 || m <= p) return out;
  Eigen::MatrixXd jac(m, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const double base = free[static_cast<std::size_t>(c)] == 0 ? opt.t2 : opt.t1;
    const double h = 1e-6 * base;
    for (Eigen::Index r = 0; r < m; ++r) {
      const double tau = points[static_cast<std::size_t>(r)].tau;
      const double up = free[static_cast<std::size_t>(c)] == 0 ? model(tau, opt.t2 + h, opt.t1) : model(tau, opt.t2, opt.t1 + h);
      const double dn = free[static_cast<std::size_t>(c)] == 0 ? model(tau, opt.t2 - h, opt.t1) : model(tau, opt.t2, opt.t1 - h);
      jac(r, c) = (up - dn) / (2 * h);
    }
  }
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) return out;
  const Eigen::MatrixXd cov = lu.inverse() * (opt.sse / static_cast<double>(m - p));
  for (Eigen::Index c = 0; c < p; ++c) out[static_cast<std::size_t>(free[static_cast<std::size_t>(c)])] = cov(c, c);
  return out;
}

DecayFit run_fit(std::span<const DecayPoint> points, DecayModel model_kind,
                 const std::function<double(double, double, double)>& model, const FitOptions& opts) {
  if (opts.fixed_t1 && !(*opts.fixed_t1 > 0.0)) throw std::invalid_argument("fixed T1 must be positive");
  double scale = 0.0;
  for (const auto& p : points) scale = std::max(scale, p.tau);
  if (!(scale > 0.0)) throw std::invalid_argument("fit needs at least one tau > 0");

  auto residuals = [&](double t2, double t1) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) r(static_cast<Eigen::Index>(k)) = model(points[k].tau, t2, t1) - points[k].value;
    return r;
  };
  auto sse = [&](double t2, double t1) { return residuals(t2, t1).squaredNorm(); };
  const auto opt = minimize(sse, residuals, scale, opts.fixed_t1);
  DecayFit fit;
  fit.model = model_kind;
  fit.t2 = opt.t2;
  fit.t1 = opt.t1;
  fit.t1_fixed = opts.fixed_t1.has_value();
  fit.residual = std::sqrt(opt.sse / static_cast<double>(points.size()));
  fit.covariance_diag = covariance(points, model, opt, !fit.t1_fixed);
  return fit;
}

}  // namespace

DecayModel parse_decay_model(std::string_view name) {
  if (name == "gaussianT2") return DecayModel::GaussianT2;
  if (name == "exponentialT2") return DecayModel::ExponentialT2;
  throw std::invalid_argument("unknown decay model '" + std::string(name) + "'");
}

std::string_view decay_model_name(DecayModel model) {
  return model == DecayModel::GaussianT2 ? "gaussianT2" : "exponentialT2";
}

double decay_model_value(DecayModel model, double tau, double t2, double t1) {
  const double coherence = model == DecayModel::GaussianT2 ? (std::isinf(t2) ? 1.0 : std::exp(-(tau / t2) * (tau / t2)))
                                                           : decay(tau, t2);
  return 0.25 * (2.0 * coherence + decay(tau, t1) + 1.0);
}

DecayFit fit_decay(std::span<const DecayPoint> points, DecayModel model, const FitOptions& opts) {
  check_points(points, 0.0, 1.0);
  return run_fit(points, model, [model](double tau, double t2, double t1) { return decay_model_value(model, tau, t2, t1); },
                 opts);
}

double ramsey_model_value(double tau, double omega, double t2p, double t1) {
  return 1.0 - decay(tau, t1) - decay(tau, t2p) * std::cos(omega * tau);
}

DecayFit fit_ramsey(std::span<const DecayPoint> points, double omega, const FitOptions& opts) {
  check_points(points, -1.0, 1.0);
  return run_fit(points, DecayModel::ExponentialT2,
                 [omega](double tau, double t2, double t1) { return ramsey_model_value(tau, omega, t2, t1); }, opts);
}

double fit_relaxation_time(std::span<const DecayPoint> points) {
  double num = 0.0, den = 0.0;
  for (const auto& p : points) {
    if (!(p.tau >= 0.0) || !std::isfinite(p.tau)) throw std::invalid_argument("relaxation fit: tau must be finite and non-negative");
    if (p.tau == 0.0 || !(p.value > 0.0)) continue;
    num += p.tau * -std::log(std::min(p.value, 1.0));
    den += p.tau * p.tau;
  }
  if (den == 0.0) throw std::invalid_argument("relaxation fit needs a positive tau with a positive value");
  const double rate = num / den;
  return rate > 1e-12 ? 1.0 / rate : kInf;
}

}  // namespace dualrail
