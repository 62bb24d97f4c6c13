#include "dualrail/noise.hpp"

#include <cmath>

namespace dualrail {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kStreamStatic = 1;
constexpr std::uint64_t kStreamOu = 2;

// Symmetric square root of the equicorrelation matrix (1-rho) I + rho 11^T.
RealMatrix correlation_sqrt(int n, double rho) {
  RealMatrix c = RealMatrix::Constant(n, n, rho);
  c.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(c);
  if (eig.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("z correlation " + std::to_string(rho) + " is not positive semi-definite for n=" +
                                std::to_string(n));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

// Unit-variance normals with pairwise correlation rho. For rho >= 0 a one-factor
// model is used so that rho = 1 gives bit-identical values.
std::vector<double> correlated_normals(int n, double rho, const RealMatrix* mixing, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(n));
  if (rho >= 0.0) {
    const double common = normal(rng);
    const double a = std::sqrt(rho), b = std::sqrt(1.0 - rho);
    for (auto& v : out) v = a * common + b * normal(rng);
  } else {
    Eigen::VectorXd z(n);
    for (int k = 0; k < n; ++k) z(k) = normal(rng);
    const Eigen::VectorXd y = (*mixing) * z;
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = y(k);
  }
  return out;
}

}  // namespace

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ splitmix64(stream)) ^ splitmix64(index)));
}

double sigma_from_t2(double t2) {
  if (!(t2 > 0.0)) throw std::invalid_argument("t2 must be positive");
  if (std::isinf(t2)) return 0.0;
  return std::sqrt(2.0) / t2;
}

void NoiseConfig::validate() const {
  if (n < 1 || n > kMaxQubits) throw std::invalid_argument("noise register size out of range");
  if (static_cast<int>(t1.size()) != n || static_cast<int>(t2.size()) != n)
    throw std::invalid_argument("t1 and t2 must have one entry per qubit");
  for (double t : t1)
    if (!(t > 0.0)) throw std::invalid_argument("t1 entries must be positive or infinite");
  for (double t : t2)
    if (!(t > 0.0)) throw std::invalid_argument("t2 entries must be positive or infinite");
  if (!(std::abs(z_correlation) <= 1.0)) throw std::invalid_argument("z correlation must lie in [-1, 1]");
  if (n > 1 && z_correlation < -1.0 / (n - 1) - 1e-12)
    throw std::invalid_argument("z correlation is not positive semi-definite for this register size");
  if (!(transverse_fraction >= 0.0)) throw std::invalid_argument("transverse fraction must be >= 0");
  if (model == NoiseModel::OrnsteinUhlenbeck && !(ou_correlation_time > 0.0))
    throw std::invalid_argument("OU correlation time must be positive");
}

bool NoiseConfig::noiseless() const {
  for (int k = 0; k < n; ++k)
    if (!std::isinf(t1[static_cast<std::size_t>(k)]) || !std::isinf(t2[static_cast<std::size_t>(k)])) return false;
  return true;
}

NoiseConfig NoiseConfig::defaults(int n) {
  NoiseConfig cfg;
  cfg.n = n;
  cfg.t1.assign(static_cast<std::size_t>(n), 20.0);
  static const double kT2[] = {3.8, 4.2, 3.9, 4.1};
  for (int k = 0; k < n; ++k) cfg.t2.push_back(kT2[k % 4]);
  return cfg;
}

NoiseConfig NoiseConfig::none(int n) {
  NoiseConfig cfg;
  cfg.n = n;
  cfg.t1.assign(static_cast<std::size_t>(n), kInfinity);
  cfg.t2.assign(static_cast<std::size_t>(n), kInfinity);
  cfg.transverse_fraction = 0.0;
  return cfg;
}

NoiseRealization sample_realization(const NoiseConfig& cfg, std::uint64_t shot) {
  cfg.validate();
  auto rng = make_rng(cfg.seed, kStreamStatic, shot);
  RealMatrix mixing;
  if (cfg.z_correlation < 0.0) mixing = correlation_sqrt(cfg.n, cfg.z_correlation);
  const auto z = correlated_normals(cfg.n, cfg.z_correlation, &mixing, rng);

  NoiseRealization r;
  r.shot = shot;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < cfg.n; ++k) {
    const double sigma = sigma_from_t2(cfg.t2[static_cast<std::size_t>(k)]);
    r.z_offsets.push_back(sigma * z[static_cast<std::size_t>(k)]);
    const double st = cfg.transverse_fraction * sigma;
    const double x = normal(rng), y = normal(rng);
    r.transverse_offsets.push_back({st * x, st * y});
  }
  return r;
}

OuPath::OuPath(const NoiseConfig& cfg, const NoiseRealization& start)
    : values_(start.z_offsets), tau_c_(cfg.ou_correlation_time), rng_(make_rng(cfg.seed, kStreamOu, start.shot)) {
  for (double t2 : cfg.t2) sigma_.push_back(sigma_from_t2(t2));
  if (cfg.z_correlation < 0.0) mixing_ = correlation_sqrt(cfg.n, cfg.z_correlation);
  corr_ = cfg.z_correlation;
}

void OuPath::advance(double dt) {
  if (dt <= 0.0) return;
  const double a = std::exp(-dt / tau_c_);
  const double b = std::sqrt(1.0 - a * a);
  const auto xi = correlated_normals(static_cast<int>(values_.size()), corr_, &mixing_, rng_);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] = a * values_[k] + b * sigma_[k] * xi[k];
}

std::array<Matrix, 2> DampingChannel::kraus() const {
  Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - p);
  k1(0, 1) = std::sqrt(p);
  return {k0, k1};
}

Matrix DampingChannel::apply(const Matrix& rho) const {
  Matrix out = rho;
  apply_damping(out, 0, 1, p);
  return out;
}

DampingChannel damping_channel(double t1, double dt) {
  if (dt < 0.0) throw std::invalid_argument("damping interval must be non-negative");
  if (!(t1 > 0.0)) throw std::invalid_argument("t1 must be positive");
  if (std::isinf(t1) || dt == 0.0) return {0.0};
  return {-std::expm1(-dt / t1)};
}

void apply_damping(Matrix& rho, int k, int n, double p) {
  if (p == 0.0) return;
  const Eigen::Index dim = rho.rows();
  const Eigen::Index bit = Eigen::Index{1} << (n - 1 - k);
  const double s = std::sqrt(1.0 - p);
  // K1 rho K1^dagger moves the |1><1| block of qubit k onto |0><0|.
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (!(j & bit)) continue;
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (!(i & bit)) continue;
      rho(i ^ bit, j ^ bit) += p * rho(i, j);
    }
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    const bool bj = (j & bit) != 0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const bool bi = (i & bit) != 0;
      if (bi && bj)
        rho(i, j) *= (1.0 - p);
      else if (bi || bj)
        rho(i, j) *= s;
    }
  }
}

}  // namespace dualrail
