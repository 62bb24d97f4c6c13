#include "dualrail/tomography.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string_view>

namespace dualrail {

namespace {

// Rotation taking the eigenbasis of `letter` to the computational basis.
Matrix basis_change(char letter) {
  const double s = 1.0 / std::sqrt(2.0);
  Matrix r = Matrix::Identity(2, 2);
  if (letter == 'X') {
    r << s, s, s, -s;
  } else if (letter == 'Y') {
    r << s, cd{0, -s}, s, cd{0, s};
  }
  return r;
}

std::vector<std::size_t> sample_counts(const std::vector<double>& probs, std::size_t shots, std::mt19937_64& rng) {
  std::vector<std::size_t> counts(probs.size(), 0);
  std::size_t left = shots;
  double mass = 1.0;
  for (std::size_t k = 0; k + 1 < probs.size() && left > 0; ++k) {
    const double p = mass > 0.0 ? std::clamp(probs[k] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::size_t> draw(left, p);
    counts[k] = draw(rng);
    left -= counts[k];
    mass -= probs[k];
  }
  counts.back() += left;
  return counts;
}

// Finite-shot linear-inversion estimate of rho.
Matrix sampled_estimate(const Matrix& rho, int n, std::size_t shots, std::mt19937_64& rng) {
  const Eigen::Index dim = rho.rows();
  const std::size_t npauli = std::size_t{1} << (2 * n);
  std::vector<double> sum(npauli, 0.0);
  std::vector<std::size_t> uses(npauli, 0);

  std::size_t settings = 1;
  for (int k = 0; k < n; ++k) settings *= 3;
  for (std::size_t s = 0; s < settings; ++s) {
    std::string letters(static_cast<std::size_t>(n), 'Z');
    Matrix rot = Matrix::Identity(1, 1);
    std::size_t code = s;
    for (int k = n - 1; k >= 0; --k) {
      letters[static_cast<std::size_t>(k)] = "XYZ"[code % 3];
      code /= 3;
    }
    for (int k = 0; k < n; ++k) rot = kron(rot, basis_change(letters[static_cast<std::size_t>(k)]));
    const Matrix rotated = rot * rho * rot.adjoint();
    std::vector<double> probs(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) probs[static_cast<std::size_t>(i)] = std::max(0.0, rotated(i, i).real());
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    for (auto& p : probs) p /= total;
    const auto counts = sample_counts(probs, shots, rng);

    // Every Pauli string obtained by replacing letters of this setting with I.
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      std::size_t idx = 0;
      for (int k = 0; k < n; ++k) {
        const bool keep = (mask >> (n - 1 - k)) & 1;
        const std::size_t digit = keep ? static_cast<std::size_t>(std::string_view("IXYZ").find(letters[static_cast<std::size_t>(k)])) : 0;
        idx = idx * 4 + digit;
      }
      double e = 0.0;
      for (Eigen::Index out = 0; out < dim; ++out) {
        const int parity = std::popcount(static_cast<std::size_t>(out) & mask) & 1;
        e += (parity ? -1.0 : 1.0) * static_cast<double>(counts[static_cast<std::size_t>(out)]);
      }
      sum[idx] += e / static_cast<double>(shots);
      uses[idx] += 1;
    }
  }
  Matrix est = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < npauli; ++i) est += (sum[i] / static_cast<double>(uses[i])) * pauli_matrix(pauli_label(i, n));
  return est / static_cast<double>(dim);
}

Eigen::VectorXd pauli_vector(const Matrix& rho, int n) {
  const std::size_t count = std::size_t{1} << (2 * n);
  Eigen::VectorXd v(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) v(static_cast<Eigen::Index>(i)) = pauli_overlap(pauli_label(i, n), rho).real();
  return v;
}

Matrix input_state(std::size_t code, int n) {
  static const Matrix kets[4] = {
      (Matrix(2, 1) << 1.0, 0.0).finished(),
      (Matrix(2, 1) << 0.0, 1.0).finished(),
      (Matrix(2, 1) << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)).finished(),
      (Matrix(2, 1) << 1.0 / std::sqrt(2.0), cd{0.0, 1.0 / std::sqrt(2.0)}).finished(),
  };
  Matrix psi = Matrix::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) {
    psi = kron(kets[code % 4], psi);
    code /= 4;
  }
  return psi * psi.adjoint();
}

}  // namespace

Matrix project_to_density(const Matrix& h) {
  const Matrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(herm);
  const Eigen::VectorXd lam = eig.eigenvalues();
  // Euclidean projection of lam onto the simplex {x >= 0, sum x = 1}.
  std::vector<double> sorted(lam.data(), lam.data() + lam.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) shift = t;
  }
  const Eigen::VectorXd projected = (lam.array() - shift).cwiseMax(0.0);
  return eig.eigenvectors() * projected.cast<cd>().asDiagonal() * eig.eigenvectors().adjoint();
}

double state_fidelity(const Matrix& rho, const Eigen::VectorXcd& psi) {
  if (rho.rows() != psi.size() || rho.cols() != psi.size()) throw std::invalid_argument("state_fidelity: dimension mismatch");
  return (psi.adjoint() * rho * psi)(0, 0).real();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("trace_distance: dimension mismatch");
  const Matrix d = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

TomographyResult state_tomography(const Matrix& rho, std::size_t shots_per_setting, std::mt19937_64& rng) {
  TomographyResult res;
  res.kind = TomographyKind::State;
  res.n = num_qubits_for_dim(rho.rows());
  res.shots_per_setting = shots_per_setting;
  res.state = shots_per_setting == 0 ? rho : project_to_density(sampled_estimate(rho, res.n, shots_per_setting, rng));
  return res;
}

TomographyResult process_tomography(const ChannelMap& channel, int n, std::size_t shots_per_setting,
                                    std::mt19937_64& rng) {
  if (n < 1 || n > 2) throw std::invalid_argument("process tomography supports 1 or 2 qubits");
  const std::size_t count = std::size_t{1} << (2 * n);
  RealMatrix s_in(count, count), s_out(count, count);
  for (std::size_t j = 0; j < count; ++j) {
    const Matrix in = input_state(j, n);
    const auto out = state_tomography(channel(in), shots_per_setting, rng);
    s_in.col(static_cast<Eigen::Index>(j)) = pauli_vector(in, n);
    s_out.col(static_cast<Eigen::Index>(j)) = pauli_vector(out.state, n);
  }
  TomographyResult res;
  res.kind = TomographyKind::Process;
  res.n = n;
  res.shots_per_setting = shots_per_setting;
  res.ptm = s_out * s_in.inverse();
  return res;
}

}  // namespace dualrail
