#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "dualrail/logical.hpp"
#include "dualrail/sim.hpp"
#include "dualrail/tomography.hpp"

using namespace dualrail;

namespace {

Eigen::VectorXcd random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cd{g(rng), g(rng)};
  return v / v.norm();
}

double law(double tau, double t2, double t1) {
  return 0.25 * (2.0 * std::exp(-(tau / t2) * (tau / t2)) + std::exp(-tau / t1) + 1.0);
}

// Amplitude damping with the coherence rescaled to exactly exp(-(tau/t2)^2).
ChannelMap law_channel(double tau, double t2, double t1) {
  const double p = 1.0 - std::exp(-tau / t1);
  const double c = std::exp(-(tau / t2) * (tau / t2));
  return [=](const Matrix& rho) {
    Matrix out = rho;
    apply_damping(out, 0, 1, p);
    out(0, 1) = rho(0, 1) * c;
    out(1, 0) = rho(1, 0) * c;
    return out;
  };
}

}  // namespace

TEST_CASE("exact state tomography returns the state") {
  std::mt19937_64 rng(1);
  Matrix rho = Matrix::Zero(4, 4);
  rho(1, 1) = 1.0;
  const auto res = state_tomography(rho, 0, rng);
  CHECK(res.kind == TomographyKind::State);
  CHECK(res.n == 2);
  CHECK(max_abs(res.state - rho) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(res.state);
  CHECK(eig.eigenvalues().maxCoeff() == doctest::Approx(1.0));
  CHECK(std::abs(eig.eigenvalues().minCoeff()) < 1e-12);
}

TEST_CASE("logical Bell state in the physical basis") {
  const auto reg = LogicalRegister::standard(2);
  Eigen::VectorXcd logical = Eigen::VectorXcd::Zero(4);
  logical(0) = logical(3) = 1.0 / std::sqrt(2.0);
  const Eigen::VectorXcd phys = encoding_isometry(reg) * logical;
  std::mt19937_64 rng(2);
  const auto res = state_tomography(phys * phys.adjoint(), 0, rng);
  CHECK(std::abs(res.state(0b0101, 0b0101) - 0.5) < 1e-15);
  CHECK(std::abs(res.state(0b1010, 0b1010) - 0.5) < 1e-15);
  CHECK(std::abs(res.state(0b0101, 0b1010) - 0.5) < 1e-15);
  CHECK(std::abs(res.state.trace() - 1.0) < 1e-15);
}

TEST_CASE("finite-shot state tomography is close to the truth") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = random_state(2, rng);
    const Matrix rho = psi * psi.adjoint();
    const auto res = state_tomography(rho, 10000, rng);
    CHECK(trace_distance(res.state, rho) < 0.05);
    CHECK(is_hermitian(res.state, 1e-12));
    CHECK(std::abs(res.state.trace() - 1.0) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(res.state);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("finite-shot error shrinks as one over root shots") {
  std::mt19937_64 rng(4);
  const auto psi = random_state(1, rng);
  const Matrix rho = psi * psi.adjoint();
  auto mean_error = [&](std::size_t shots) {
    double total = 0.0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
      total += trace_distance(state_tomography(rho, shots, rng).state, rho);
    }
    return total / trials;
  };
  const double e2 = mean_error(100), e3 = mean_error(1000), e4 = mean_error(10000);
  CAPTURE(e2);
  CAPTURE(e3);
  CAPTURE(e4);
  CHECK(e2 / e3 == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
  CHECK(e3 / e4 == doctest::Approx(std::sqrt(10.0)).epsilon(0.35));
}

TEST_CASE("PSD projection does not increase the distance to a valid state") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const auto psi = random_state(2, rng);
    const Matrix rho = psi * psi.adjoint();
    Matrix noise(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j) noise(i, j) = cd{g(rng), g(rng)};
    noise = 0.05 * (noise + noise.adjoint());
    noise -= noise.trace() / 4.0 * Matrix::Identity(4, 4);
    const Matrix raw = rho + noise;
    const Matrix proj = project_to_density(raw);
    CHECK(trace_distance(proj, rho) <= trace_distance(raw, rho) + 1e-12);
    CHECK(std::abs(proj.trace() - 1.0) < 1e-12);
  }
}

TEST_CASE("project_to_density keeps density matrices") {
  Matrix rho = Matrix::Zero(2, 2);
  rho << 0.7, cd(0.1, 0.2), cd(0.1, -0.2), 0.3;
  CHECK(max_abs(project_to_density(rho) - rho) < 1e-12);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.2;
  neg(1, 1) = -0.2;
  const Matrix p = project_to_density(neg);
  CHECK(std::abs(p(0, 0) - 1.0) < 1e-12);
  CHECK(std::abs(p(1, 1)) < 1e-12);
}

TEST_CASE("exact process tomography") {
  std::mt19937_64 rng(6);
  SUBCASE("identity") {
    for (int n : {1, 2}) {
      const auto res = process_tomography([](const Matrix& m) { return m; }, n, 0, rng);
      CHECK((res.ptm - RealMatrix::Identity(res.ptm.rows(), res.ptm.cols())).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("decay law channel") {
    for (double tau : {0.5, 2.0, 3.8, 6.0}) {
      const auto res = process_tomography(law_channel(tau, 3.8, 20.0), 1, 0, rng);
      const double f = process_fidelity(ChannelEstimate{1, res.ptm, 0}, identity(1));
      CHECK(std::abs(f - law(tau, 3.8, 20.0)) < 1e-10);
    }
  }
  SUBCASE("Z rotation") {
    const double phi = 0.9;
    const Matrix u = gate_matrix(GateKind::RZ, std::vector<int>{0}, 1, phi);
    const auto res = process_tomography([&](const Matrix& m) { return Matrix(u * m * u.adjoint()); }, 1, 0, rng);
    CHECK(res.ptm(1, 1) == doctest::Approx(std::cos(phi)));
    CHECK(res.ptm(2, 2) == doctest::Approx(std::cos(phi)));
    CHECK(res.ptm(2, 1) == doctest::Approx(std::sin(phi)));
    CHECK(res.ptm(1, 2) == doctest::Approx(-std::sin(phi)));
    CHECK(res.ptm(3, 3) == doctest::Approx(1.0));
    CHECK((res.ptm - unitary_ptm(u)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("matches the simulated channel") {
    auto cfg = NoiseConfig::defaults(2);
    const auto sched = Schedule::from_sequence(build_sequence("D2", 2, 1.0, 1), 0.01);
    const auto est = monte_carlo_channel(sched, cfg, 20);
    const auto res = process_tomography(
        [&](const Matrix& rho) {
          Matrix out = Matrix::Zero(4, 4);
          for (std::size_t j = 0; j < 16; ++j) {
            const cd c = pauli_overlap(pauli_label(j, 2), rho) / 4.0;
            for (std::size_t i = 0; i < 16; ++i)
              out += c * est.ptm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * pauli_matrix(pauli_label(i, 2));
          }
          return out;
        },
        2, 0, rng);
    CHECK((res.ptm - est.ptm).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(process_tomography([](const Matrix& m) { return m; }, 3, 0, rng), std::invalid_argument);
}

TEST_CASE("sampled process tomography approaches the truth") {
  std::mt19937_64 rng(7);
  const auto res = process_tomography(law_channel(2.0, 3.8, 20.0), 1, 20000, rng);
  const double f = process_fidelity(ChannelEstimate{1, res.ptm, 20000}, identity(1));
  CHECK(std::abs(f - law(2.0, 3.8, 20.0)) < 0.02);
}

TEST_CASE("state_fidelity examples") {
  std::mt19937_64 rng(8);
  const auto psi = random_state(2, rng);
  CHECK(state_fidelity(psi * psi.adjoint(), psi) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  CHECK(state_fidelity(Matrix::Identity(4, 4) / 4.0, bell) == doctest::Approx(0.25));
  CHECK_THROWS_AS(state_fidelity(Matrix::Identity(2, 2), bell), std::invalid_argument);
}
