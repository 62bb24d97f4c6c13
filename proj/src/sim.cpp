#include "dualrail/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <thread>

namespace dualrail {

namespace {

constexpr cd kI{0.0, 1.0};
constexpr std::size_t kShotBlock = 64;
// Registers up to this dimension evolve segments as cached superoperators.
constexpr Eigen::Index kSuperDim = 4;

inline int bit_of(Eigen::Index idx, int k, int n) { return static_cast<int>((idx >> (n - 1 - k)) & 1); }

// Static part of the per-shot Hamiltonian: sum_k [d_k Z_k + x_k X_k + y_k Y_k] / 2.
Matrix shot_hamiltonian(int n, const std::vector<double>& z, const std::vector<std::array<double, 2>>& xy) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    double diag = 0.0;
    for (int k = 0; k < n; ++k) diag += (bit_of(i, k, n) ? -0.5 : 0.5) * z[static_cast<std::size_t>(k)];
    h(i, i) = diag;
  }
  for (int k = 0; k < n; ++k) {
    const auto [x, y] = xy[static_cast<std::size_t>(k)];
    if (x == 0.0 && y == 0.0) continue;
    const Eigen::Index bit = Eigen::Index{1} << (n - 1 - k);
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i & bit) continue;
      // <1|X|0> = 1, <1|Y|0> = i
      h(i | bit, i) += 0.5 * cd{x, y};
      h(i, i | bit) += 0.5 * cd{x, -y};
    }
  }
  return h;
}

bool has_transverse(const NoiseRealization& r) {
  return std::any_of(r.transverse_offsets.begin(), r.transverse_offsets.end(),
                     [](const auto& v) { return v[0] != 0.0 || v[1] != 0.0; });
}

// Evolves a batch of operators through one schedule for one noise draw.
class ShotPropagator {
 public:
  ShotPropagator(const Schedule& sched, const NoiseRealization& noise, const NoiseConfig& cfg)
      : sched_(sched), cfg_(cfg), noise_(noise), n_(sched.n), dim_(Eigen::Index{1} << sched.n),
        diagonal_(!has_transverse(noise)), ou_(cfg.model == NoiseModel::OrnsteinUhlenbeck) {
    if (noise.z_offsets.size() != static_cast<std::size_t>(n_) || cfg.n != n_)
      throw std::invalid_argument("noise register size does not match the schedule");
    if (!ou_ && !diagonal_ && dim_ <= kSuperDim) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(shot_hamiltonian(n_, noise.z_offsets, noise.transverse_offsets));
      basis_ = eig.eigenvectors();
      energies_ = eig.eigenvalues();
    }
    if (ou_) path_.emplace(cfg, noise);
    tmp_.resize(dim_, dim_);
  }

  void run(std::vector<Matrix>& ops) {
    double now = 0.0;
    for (const auto& ev : sched_.events) {
      evolve(ops, ev.time - now);
      now = std::max(now, ev.time);
      apply_event(ops, ev);
    }
    evolve(ops, sched_.duration - now);
  }

 private:
  void apply_event(std::vector<Matrix>& ops, const ScheduleEvent& ev) {
    for (auto& rho : ops) {
      tmp_.noalias() = ev.unitary * rho;
      rho.noalias() = tmp_ * ev.unitary.adjoint();
      if (ev.error_rate > 0.0)
        for (const auto& g : ev.gates) depolarize(rho, g.targets, n_, ev.error_rate);
    }
  }

  void damp(std::vector<Matrix>& ops, double dt) {
    if (dt <= 0.0) return;
    for (int k = 0; k < n_; ++k) {
      const double p = damping_channel(cfg_.t1[static_cast<std::size_t>(k)], dt).p;
      if (p == 0.0) continue;
      for (auto& rho : ops) apply_damping(rho, k, n_, p);
    }
  }

  void apply_phases(std::vector<Matrix>& ops, const Eigen::VectorXcd& u) {
    for (auto& rho : ops)
      for (Eigen::Index j = 0; j < dim_; ++j) {
        const cd cj = std::conj(u(j));
        for (Eigen::Index i = 0; i < dim_; ++i) rho(i, j) *= u(i) * cj;
      }
  }

  Eigen::VectorXcd diagonal_phases(const std::vector<double>& z, double dt) const {
    Eigen::VectorXcd u(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) {
      double e = 0.0;
      for (int k = 0; k < n_; ++k) e += (bit_of(i, k, n_) ? -0.5 : 0.5) * z[static_cast<std::size_t>(k)];
      u(i) = std::exp(-kI * (e * dt));
    }
    return u;
  }

  void apply_unitary(std::vector<Matrix>& ops, const Matrix& u) {
    for (auto& rho : ops) {
      tmp_.noalias() = u * rho;
      rho.noalias() = tmp_ * u.adjoint();
    }
  }

  void evolve(std::vector<Matrix>& ops, double length) {
    if (length <= 0.0) return;
    if (diagonal_ && !ou_) {
      // Diagonal Hamiltonian commutes with amplitude damping: exact in one step.
      apply_phases(ops, diagonal_phases(noise_.z_offsets, length));
      damp(ops, length);
      return;
    }
    const int steps = std::max(1, static_cast<int>(std::ceil(length / sched_.trotter_step - 1e-9)));
    const double dt = length / steps;
    if (!ou_ && dim_ <= kSuperDim) {
      const Matrix& s = segment_superop(steps, dt);
      for (auto& rho : ops) {
        Eigen::Map<Eigen::VectorXcd> v(rho.data(), rho.size());
        vec_tmp_.noalias() = s * v;
        v = vec_tmp_;
      }
      return;
    }
    if (!ou_) {
      // H and the damping are sums of single-qubit terms, so the Strang product
      // factorises into commuting per-qubit segment maps.
      const auto& maps = local_segment(steps, dt);
      for (auto& rho : ops)
        for (int k = 0; k < n_; ++k) apply_local(rho, k, maps[static_cast<std::size_t>(k)]);
      return;
    }
    // Strang splitting: D(dt/2) [U D(dt)]... U D(dt/2)
    damp(ops, dt / 2);
    for (int s = 0; s < steps; ++s) {
      if (ou_) {
        const auto& z = path_->current();
        if (diagonal_) {
          apply_phases(ops, diagonal_phases(z, dt));
        } else {
          Eigen::SelfAdjointEigenSolver<Matrix> eig(shot_hamiltonian(n_, z, noise_.transverse_offsets));
          apply_unitary(ops, eig.eigenvectors() *
                                 (-kI * dt * eig.eigenvalues().cast<cd>()).array().exp().matrix().asDiagonal() *
                                 eig.eigenvectors().adjoint());
        }
        path_->advance(dt);
      }
      damp(ops, s + 1 < steps ? dt : dt / 2);
    }
  }

  // Column-major vec: vec(A X B) = (B^T kron A) vec(X).
  Matrix damping_superop(double dt) const {
    const Eigen::Index d2 = dim_ * dim_;
    Matrix s(d2, d2);
    for (Eigen::Index k = 0; k < d2; ++k) {
      Matrix e = Matrix::Zero(dim_, dim_);
      e(k % dim_, k / dim_) = 1.0;
      for (int q = 0; q < n_; ++q) apply_damping(e, q, n_, damping_channel(cfg_.t1[static_cast<std::size_t>(q)], dt).p);
      s.col(k) = Eigen::Map<const Eigen::VectorXcd>(e.data(), d2);
    }
    return s;
  }

  // D(dt/2) [U D(dt)]^(m-1) U D(dt/2) as one superoperator, cached per segment shape.
  const Matrix& segment_superop(int steps, double dt) {
    for (const auto& c : cache_)
      if (c.steps == steps && std::abs(c.dt - dt) <= 1e-12 * dt) return c.map;
    const Matrix u = basis_ * (-kI * dt * energies_.cast<cd>()).array().exp().matrix().asDiagonal() * basis_.adjoint();
    const Matrix su = kron(u.conjugate(), u);
    const Matrix half = damping_superop(dt / 2);
    Matrix step = su * damping_superop(dt);
    Matrix power = Matrix::Identity(su.rows(), su.cols());
    for (int e = steps - 1; e > 0; e >>= 1) {
      if (e & 1) power = power * step;
      if (e > 1) step = step * step;
    }
    cache_.push_back({steps, dt, half * power * su * half});
    return cache_.back().map;
  }

  // exp(-i h_k dt) for h_k = (d Z + x X + y Y) / 2 on qubit k.
  Matrix local_unitary(int k, double dt) const {
    const double z = noise_.z_offsets[static_cast<std::size_t>(k)];
    const auto [x, y] = noise_.transverse_offsets[static_cast<std::size_t>(k)];
    const double r = 0.5 * std::sqrt(x * x + y * y + z * z);
    Matrix u = Matrix::Identity(2, 2) * std::cos(r * dt);
    if (r > 0.0) {
      const double s = std::sin(r * dt) / (2.0 * r);
      u(0, 0) += -kI * s * z;
      u(1, 1) += kI * s * z;
      u(0, 1) += -kI * s * cd{x, -y};
      u(1, 0) += -kI * s * cd{x, y};
    }
    return u;
  }

  Matrix local_damping(int k, double dt) const {
    const double p = damping_channel(cfg_.t1[static_cast<std::size_t>(k)], dt).p;
    Matrix s(4, 4);
    for (Eigen::Index c = 0; c < 4; ++c) {
      Matrix e = Matrix::Zero(2, 2);
      e(c % 2, c / 2) = 1.0;
      apply_damping(e, 0, 1, p);
      s.col(c) = Eigen::Map<const Eigen::VectorXcd>(e.data(), 4);
    }
    return s;
  }

  const std::vector<Matrix>& local_segment(int steps, double dt) {
    for (const auto& c : local_cache_)
      if (c.steps == steps && std::abs(c.dt - dt) <= 1e-12 * dt) return c.maps;
    std::vector<Matrix> maps;
    for (int k = 0; k < n_; ++k) {
      const Matrix u = local_unitary(k, dt);
      const Matrix su = kron(u.conjugate(), u);
      const Matrix half = local_damping(k, dt / 2);
      Matrix step = su * local_damping(k, dt);
      Matrix power = Matrix::Identity(4, 4);
      for (int e = steps - 1; e > 0; e >>= 1) {
        if (e & 1) power = power * step;
        if (e > 1) step = step * step;
      }
      maps.push_back(half * power * su * half);
    }
    local_cache_.push_back({steps, dt, std::move(maps)});
    return local_cache_.back().maps;
  }

  // Applies a one-qubit superoperator (column-major vec of the 2x2 block) to qubit k.
  void apply_local(Matrix& rho, int k, const Matrix& s) const {
    const Eigen::Index bit = Eigen::Index{1} << (n_ - 1 - k);
    for (Eigen::Index j = 0; j < dim_; ++j) {
      if (j & bit) continue;
      for (Eigen::Index i = 0; i < dim_; ++i) {
        if (i & bit) continue;
        const cd v[4] = {rho(i, j), rho(i | bit, j), rho(i, j | bit), rho(i | bit, j | bit)};
        cd w[4];
        for (int r = 0; r < 4; ++r) w[r] = s(r, 0) * v[0] + s(r, 1) * v[1] + s(r, 2) * v[2] + s(r, 3) * v[3];
        rho(i, j) = w[0];
        rho(i | bit, j) = w[1];
        rho(i, j | bit) = w[2];
        rho(i | bit, j | bit) = w[3];
      }
    }
  }

  struct LocalSegment {
    int steps;
    double dt;
    std::vector<Matrix> maps;
  };

  struct CachedSegment {
    int steps;
    double dt;
    Matrix map;
  };

  const Schedule& sched_;
  const NoiseConfig& cfg_;
  const NoiseRealization& noise_;
  int n_;
  Eigen::Index dim_;
  bool diagonal_;
  bool ou_;
  Matrix basis_;
  Eigen::VectorXd energies_;
  std::optional<OuPath> path_;
  Matrix tmp_;
  Eigen::VectorXcd vec_tmp_;
  std::deque<CachedSegment> cache_;
  std::deque<LocalSegment> local_cache_;
};

bool dephasing_free(const NoiseConfig& cfg) {
  return std::all_of(cfg.t2.begin(), cfg.t2.end(), [](double t) { return std::isinf(t); });
}

}  // namespace

// ---------------------------------------------------------------------------

DensityState DensityState::basis(int n, std::size_t index) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  if (static_cast<Eigen::Index>(index) >= dim) throw std::invalid_argument("basis index out of range");
  DensityState s{n, Matrix::Zero(dim, dim)};
  s.rho(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
  return s;
}

DensityState DensityState::pure(const Eigen::VectorXcd& psi) {
  const int n = num_qubits_for_dim(psi.size());
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("state vector must be nonzero");
  const Eigen::VectorXcd v = psi / norm;
  return {n, v * v.adjoint()};
}

void DensityState::validate(double tol) const {
  if (rho.rows() != (Eigen::Index{1} << n) || rho.cols() != rho.rows())
    throw InvariantViolation("density matrix has the wrong dimension");
  if (!is_hermitian(rho, tol)) throw InvariantViolation("density matrix is not Hermitian");
  if (std::abs(rho.trace() - cd{1.0, 0.0}) > tol) throw InvariantViolation("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rho, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -tol) throw InvariantViolation("density matrix has a negative eigenvalue");
}

// ---------------------------------------------------------------------------

Schedule Schedule::idle(int n, double duration) {
  if (duration < 0.0) throw std::invalid_argument("duration must be non-negative");
  Schedule s;
  s.n = n;
  s.duration = duration;
  s.trotter_step = duration > 0.0 ? duration / 64.0 : 1.0;
  return s;
}

Schedule Schedule::from_sequence(const PulseSequence& seq, double error_rate) {
  Schedule s = idle(seq.n, seq.duration());
  double shortest = seq.period;
  double last = 0.0;
  for (const auto& p : seq.pulses) {
    shortest = std::min(shortest, p.time - last);
    last = p.time;
  }
  if (seq.period - last > 0.0) shortest = std::min(shortest, seq.period - last);
  s.trotter_step = shortest / 64.0;
  for (const auto& p : seq.unrolled()) s.add(p.time, p.layer, error_rate);
  return s;
}

void Schedule::add(double time, std::vector<GateOp> gates, double error_rate) {
  if (!(time >= 0.0) || time > duration * (1.0 + 1e-12))
    throw std::invalid_argument("event time outside [0, duration]");
  ScheduleEvent ev;
  ev.time = time;
  ev.unitary = circuit_unitary(gates, n);
  ev.gates = std::move(gates);
  ev.error_rate = error_rate;
  const auto pos = std::upper_bound(events.begin(), events.end(), time,
                                    [](double t, const ScheduleEvent& e) { return t < e.time; });
  events.insert(pos, std::move(ev));
}

void Schedule::append(const Schedule& other) {
  if (other.n != n) throw std::invalid_argument("cannot append schedules on different registers");
  const double offset = duration;
  for (auto ev : other.events) {
    ev.time += offset;
    events.push_back(std::move(ev));
  }
  if (other.duration > 0.0) trotter_step = duration > 0.0 ? std::min(trotter_step, other.trotter_step) : other.trotter_step;
  duration += other.duration;
}

Matrix Schedule::ideal_unitary() const {
  Matrix u = identity(n);
  for (const auto& ev : events) u = ev.unitary * u;
  return u;
}

void Schedule::validate() const {
  if (n < 1 || n > kMaxQubits) throw std::invalid_argument("schedule register size out of range");
  if (duration < 0.0) throw std::invalid_argument("schedule duration must be non-negative");
  if (!(trotter_step > 0.0)) throw std::invalid_argument("trotter step must be positive");
  if (duration > 0.0 && trotter_step > duration / 10.0 * (1.0 + 1e-12))
    throw std::invalid_argument("trotter step must not exceed a tenth of the duration");
  double last = 0.0;
  for (const auto& ev : events) {
    if (ev.time < last || ev.time < 0.0 || ev.time > duration * (1.0 + 1e-12))
      throw std::invalid_argument("schedule events must be time ordered within [0, duration]");
    if (ev.error_rate < 0.0 || ev.error_rate > 1.0) throw std::invalid_argument("gate error rate must lie in [0, 1]");
    last = ev.time;
  }
}

// ---------------------------------------------------------------------------

Matrix evolve_operator(const Matrix& op, const Schedule& sched, const NoiseRealization& noise, const NoiseConfig& cfg) {
  std::vector<Matrix> ops{op};
  ShotPropagator(sched, noise, cfg).run(ops);
  return ops.front();
}

DensityState evolve_shot(const DensityState& state, const Schedule& sched, const NoiseRealization& noise,
                         const NoiseConfig& cfg) {
  if (state.n != sched.n) throw std::invalid_argument("state and schedule register sizes differ");
  sched.validate();
  DensityState out{state.n, evolve_operator(state.rho, sched, noise, cfg)};
  out.validate(1e-9);
  return out;
}

unsigned worker_threads() { return std::max(1U, std::thread::hardware_concurrency()); }

std::vector<Matrix> ImageBlocks::mean() const {
  std::vector<Matrix> total;
  std::size_t shots = 0;
  for (std::size_t b = 0; b < sums.size(); ++b) {
    if (total.empty()) total = sums[b];
    else
      for (std::size_t j = 0; j < total.size(); ++j) total[j] += sums[b][j];
    shots += block_shots[b];
  }
  for (auto& m : total) m /= static_cast<double>(shots);
  return total;
}

std::vector<Matrix> ImageBlocks::block_mean(std::size_t b) const {
  std::vector<Matrix> out = sums.at(b);
  for (auto& m : out) m /= static_cast<double>(block_shots[b]);
  return out;
}

ImageBlocks monte_carlo_blocks(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                               const std::vector<Matrix>& inputs) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  sched.validate();
  cfg.validate();
  if (cfg.n != sched.n) throw std::invalid_argument("noise config and schedule register sizes differ");

  auto run_shot = [&](std::size_t shot, std::vector<Matrix>& acc, double weight) {
    const auto noise = sample_realization(cfg, shot);
    std::vector<Matrix> ops = inputs;
    ShotPropagator(sched, noise, cfg).run(ops);
    for (std::size_t j = 0; j < ops.size(); ++j) acc[j] += weight * ops[j];
  };
  auto zeros = [&] {
    std::vector<Matrix> z;
    for (const auto& in : inputs) z.push_back(Matrix::Zero(in.rows(), in.cols()));
    return z;
  };

  ImageBlocks out;
  // Every draw is identical when nothing dephases.
  if (dephasing_free(cfg)) {
    auto acc = zeros();
    run_shot(0, acc, static_cast<double>(shots));
    out.sums.push_back(std::move(acc));
    out.block_shots.push_back(shots);
    return out;
  }

  const std::size_t blocks = (shots + kShotBlock - 1) / kShotBlock;
  out.sums.resize(blocks);
  for (std::size_t b = 0; b < blocks; ++b) out.block_shots.push_back(std::min(shots, (b + 1) * kShotBlock) - b * kShotBlock);
  auto work = [&](std::size_t first_block, std::size_t stride) {
    for (std::size_t b = first_block; b < blocks; b += stride) {
      auto acc = zeros();
      for (std::size_t s = b * kShotBlock; s < std::min(shots, (b + 1) * kShotBlock); ++s) run_shot(s, acc, 1.0);
      out.sums[b] = std::move(acc);
    }
  };
  const std::size_t threads = std::min<std::size_t>(worker_threads(), blocks);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
  }
  return out;
}

std::vector<Matrix> monte_carlo_images(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots,
                                       const std::vector<Matrix>& inputs) {
  return monte_carlo_blocks(sched, cfg, shots, inputs).mean();
}

std::vector<Matrix> pauli_inputs(int n) {
  const std::size_t count = std::size_t{1} << (2 * n);
  std::vector<Matrix> inputs;
  inputs.reserve(count);
  for (std::size_t j = 0; j < count; ++j) inputs.push_back(pauli_matrix(pauli_label(j, n)));
  return inputs;
}

ChannelEstimate channel_from_images(const std::vector<Matrix>& images, int n, std::size_t shots) {
  const std::size_t count = std::size_t{1} << (2 * n);
  if (images.size() != count) throw std::invalid_argument("expected one image per Pauli input");
  ChannelEstimate est{n, RealMatrix(count, count), shots};
  const double d = static_cast<double>(Eigen::Index{1} << n);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = pauli_label(i, n);
    for (std::size_t j = 0; j < count; ++j)
      est.ptm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pauli_overlap(label, images[j]).real() / d;
  }
  return est;
}

ChannelEstimate monte_carlo_channel(const Schedule& sched, const NoiseConfig& cfg, std::size_t shots) {
  return channel_from_images(monte_carlo_images(sched, cfg, shots, pauli_inputs(sched.n)), sched.n, shots);
}

RealMatrix ptm_from_map(const std::function<Matrix(const Matrix&)>& map, int n) {
  const std::size_t count = std::size_t{1} << (2 * n);
  const double d = static_cast<double>(Eigen::Index{1} << n);
  RealMatrix r(count, count);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < count; ++i) labels.push_back(pauli_label(i, n));
  for (std::size_t j = 0; j < count; ++j) {
    const Matrix image = map(pauli_matrix(labels[j]));
    for (std::size_t i = 0; i < count; ++i)
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pauli_overlap(labels[i], image).real() / d;
  }
  return r;
}

RealMatrix unitary_ptm(const Matrix& u) {
  const int n = num_qubits_for_dim(u.rows());
  return ptm_from_map([&](const Matrix& p) -> Matrix { return u * p * u.adjoint(); }, n);
}

double process_fidelity(const ChannelEstimate& est, const Matrix& ideal) {
  const Eigen::Index d = Eigen::Index{1} << est.n;
  if (ideal.rows() != d || ideal.cols() != d || est.ptm.rows() != d * d || est.ptm.cols() != d * d)
    throw std::invalid_argument("process_fidelity: dimension mismatch");
  constexpr double kTol = 1e-6;
  if (std::abs(est.ptm(0, 0) - 1.0) > kTol || est.ptm.row(0).tail(d * d - 1).cwiseAbs().maxCoeff() > kTol)
    throw std::invalid_argument("process_fidelity: channel is not trace preserving");
  const double f = (unitary_ptm(ideal).transpose() * est.ptm).trace() / static_cast<double>(d * d);
  return std::clamp(f, 0.0, 1.0);
}

void depolarize(Matrix& rho, std::span<const int> targets, int n, double p) {
  if (p == 0.0 || targets.empty()) return;
  const Eigen::Index dim = rho.rows();
  Eigen::Index tmask = 0;
  for (int t : targets) tmask |= Eigen::Index{1} << (n - 1 - t);
  const double share = 1.0 / static_cast<double>(Eigen::Index{1} << targets.size());

  // Partial trace over the targets, then I/2^k on them.
  Matrix reduced = Matrix::Zero(dim, dim);  // indexed by (i & ~tmask, j & ~tmask)
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i)
      if ((i & tmask) == (j & tmask)) reduced(i & ~tmask, j & ~tmask) += rho(i, j);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < dim; ++i) {
      rho(i, j) *= (1.0 - p);
      if ((i & tmask) == (j & tmask)) rho(i, j) += p * share * reduced(i & ~tmask, j & ~tmask);
    }
}

}  // namespace dualrail
