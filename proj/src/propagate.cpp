#include "qwork/propagator.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <cmath>
#include <complex>
#include <cstring>
#include <string>

#include "qwork/errors.hpp"
#include "qwork/simd/kernels.hpp"
#include "qwork/spectra.hpp"
#include "qwork/thermo.hpp"

namespace qwork {

namespace {

// Largest per-substep norm bound; keeps the Taylor order near ten.
constexpr double kMaxTheta = 0.5;
constexpr double kTaylorTolerance = 1e-16;
constexpr int kMaxOrder = 40;
// Above this dimension the endpoint spectra are not computed and only the
// Gershgorin bound is used.
constexpr std::size_t kSpectralBoundMaxDim = 1200;

struct Factor {
  double s;   // Hamiltonian sampled at t = s * tau
  double dt;  // exponent length
  int step;   // owning step, for the fault hook
};

std::vector<Factor> schedule(Integrator integrator, int steps) {
  std::vector<Factor> out;
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * h;
    if (integrator == Integrator::Midpoint) {
      out.push_back({t0 + 0.5 * h, h, k});
    } else {
      out.push_back({t0 + h / 6.0, 0.5 * h, k});
      out.push_back({t0 + 5.0 * h / 6.0, 0.5 * h, k});
    }
  }
  return out;
}

// H(s * tau) = off_diagonal + diag(base + s * slope).
struct RampedHamiltonian {
  CsrMatrix off_diagonal;
  Eigen::VectorXd base;
  Eigen::VectorXd slope;
  Eigen::VectorXd row_abs;

  std::size_t dim() const { return static_cast<std::size_t>(base.size()); }
};

void fill_row_abs(RampedHamiltonian& h) {
  h.row_abs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.dim()));
  for (std::size_t r = 0; r < h.off_diagonal.rows(); ++r) {
    for (auto k = h.off_diagonal.row_offsets[r]; k < h.off_diagonal.row_offsets[r + 1]; ++k) {
      h.row_abs[static_cast<Eigen::Index>(r)] += std::abs(h.off_diagonal.values[k]);
    }
  }
}

RampedHamiltonian ramped_hamiltonian(const ChainSpec& spec, const SectorBasis& basis,
                                     const DriveProtocol& drive) {
  RampedHamiltonian h;
  h.off_diagonal = hopping_operator(basis, spec.hopping);
  h.base = onsite_diagonal(basis, drive.mu0);
  const auto docc = double_occupancy_diagonal(basis);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    h.base[static_cast<Eigen::Index>(k)] += spec.interaction * docc[k];
  }
  h.slope = onsite_diagonal(basis, drive.mutau);
  fill_row_abs(h);
  return h;
}

Eigen::MatrixXd dense(const RampedHamiltonian& h, double s) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.diagonal() = h.base + s * h.slope;
  for (std::size_t r = 0; r < h.off_diagonal.rows(); ++r) {
    for (auto k = h.off_diagonal.row_offsets[r]; k < h.off_diagonal.row_offsets[r + 1]; ++k) {
      m(static_cast<Eigen::Index>(r), h.off_diagonal.columns[k]) = h.off_diagonal.values[k];
    }
  }
  return m;
}

// Invariant subspace: member q is the vector c1 |first> + c2 |second>
// (second == first and c2 == 0 for a single basis state).
struct Member {
  std::uint32_t first;
  std::uint32_t second;
  double c1;
  double c2;
};

struct Block {
  std::vector<Member> members;
  RampedHamiltonian ham;
};

Block whole_space(const RampedHamiltonian& h) {
  Block b;
  b.ham = h;
  for (std::uint32_t i = 0; i < h.dim(); ++i) b.members.push_back({i, i, 1.0, 0.0});
  return b;
}

// Exchanging the spin labels of every particle maps |a, b> to
// (-1)^(N_up N_down) |b, a> and commutes with the Hamiltonian when
// N_up == N_down. Its two eigenspaces are propagated separately; each is half
// the size, which halves the cost of the sparse products.
std::vector<Block> spin_flip_blocks(const SectorBasis& basis, const RampedHamiltonian& h) {
  const std::size_t dim = basis.dim();
  std::vector<std::uint32_t> partner(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const BasisState st = basis[i];
    const auto j = basis.index_of(BasisState{st.down, st.up});
    if (!j) return {whole_space(h)};
    partner[i] = static_cast<std::uint32_t>(*j);
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(*j);
    auto close = [](double u, double v) { return std::abs(u - v) <= 1e-12 * (1.0 + std::abs(u)); };
    if (!close(h.base[a], h.base[b]) || !close(h.slope[a], h.slope[b])) return {whole_space(h)};
  }
  const int n = std::popcount(basis[0].up);
  const double sigma = (n * n) % 2 == 0 ? 1.0 : -1.0;
  const double r = std::sqrt(0.5);

  std::vector<Block> blocks(2);
  for (int parity = 0; parity < 2; ++parity) {
    const double sign = parity == 0 ? 1.0 : -1.0;  // eigenvalue of the exchange
    auto& members = blocks[static_cast<std::size_t>(parity)].members;
    for (std::uint32_t i = 0; i < dim; ++i) {
      const std::uint32_t j = partner[i];
      if (i < j) {
        members.push_back({i, j, r, sign * sigma * r});
      } else if (i == j && sigma == sign) {
        members.push_back({i, i, 1.0, 0.0});
      }
    }
  }
  if (blocks[0].members.size() + blocks[1].members.size() != dim) return {whole_space(h)};

  const double drop = 1e-14 * std::max(1.0, h.row_abs.maxCoeff());
  for (Block& blk : blocks) {
    const std::size_t m = blk.members.size();
    std::vector<std::int64_t> slot(dim, -1);
    std::vector<double> coef(dim, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      const Member& mb = blk.members[q];
      slot[mb.first] = static_cast<std::int64_t>(q);
      coef[mb.first] = mb.c1;
      if (mb.second != mb.first) {
        slot[mb.second] = static_cast<std::int64_t>(q);
        coef[mb.second] = mb.c2;
      }
    }
    RampedHamiltonian& bh = blk.ham;
    bh.base.resize(static_cast<Eigen::Index>(m));
    bh.slope.resize(static_cast<Eigen::Index>(m));
    std::vector<double> row(m, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      const Member& mb = blk.members[q];
      bh.base[static_cast<Eigen::Index>(q)] = h.base[mb.first];
      bh.slope[static_cast<Eigen::Index>(q)] = h.slope[mb.first];
      // <e_p| H_off |e_q> for every p; H_off is symmetric, so rows serve as columns.
      std::fill(row.begin(), row.end(), 0.0);
      auto add_row = [&](std::uint32_t i, double c) {
        if (c == 0.0) return;
        for (auto k = h.off_diagonal.row_offsets[i]; k < h.off_diagonal.row_offsets[i + 1]; ++k) {
          const auto col = h.off_diagonal.columns[k];
          if (slot[col] >= 0) {
            row[static_cast<std::size_t>(slot[col])] += coef[col] * c * h.off_diagonal.values[k];
          }
        }
      };
      add_row(mb.first, mb.c1);
      if (mb.second != mb.first) add_row(mb.second, mb.c2);
      for (std::size_t p = 0; p < m; ++p) {
        if (std::abs(row[p]) > drop) {
          if (p == q) throw NumericalFailure("spin-exchange block has a hopping diagonal");
          bh.off_diagonal.columns.push_back(static_cast<std::uint32_t>(p));
          bh.off_diagonal.values.push_back(row[p]);
        }
      }
      bh.off_diagonal.row_offsets.push_back(
          static_cast<std::uint32_t>(bh.off_diagonal.columns.size()));
    }
    fill_row_abs(bh);
  }
  return blocks;
}

// Bounds on the spectrum of H(s) for s in [0, 1]. The largest eigenvalue of
// an affine family is convex in s and the smallest is concave, so the
// endpoint eigenvalues bound every intermediate spectrum by interpolation.
struct SpectralEnvelope {
  bool known = false;
  double lo0 = 0.0, hi0 = 0.0, lo1 = 0.0, hi1 = 0.0;
};

SpectralEnvelope spectral_envelope(const std::vector<Block>& blocks) {
  SpectralEnvelope env;
  std::size_t dim = 0;
  for (const Block& b : blocks) dim = std::max(dim, b.ham.dim());
  if (dim > kSpectralBoundMaxDim) return env;
  env.lo0 = env.lo1 = std::numeric_limits<double>::infinity();
  env.hi0 = env.hi1 = -std::numeric_limits<double>::infinity();
  for (const Block& b : blocks) {
    if (b.ham.dim() == 0) continue;
    for (int end = 0; end < 2; ++end) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense(b.ham, end),
                                                            Eigen::EigenvaluesOnly);
      if (solver.info() != Eigen::Success) return SpectralEnvelope{};
      const auto& ev = solver.eigenvalues();
      double& lo = end == 0 ? env.lo0 : env.lo1;
      double& hi = end == 0 ? env.hi0 : env.hi1;
      lo = std::min(lo, ev.minCoeff());
      hi = std::max(hi, ev.maxCoeff());
    }
  }
  env.known = true;
  return env;
}

struct FactorPlan {
  double s;
  double center;
  double sub_dt;
  int substeps;
  int order;
  int step;
};

int taylor_order(double theta) {
  // smallest m with theta^(m+1) / (m+1)! below tolerance
  double bound = theta;
  for (int m = 1; m < kMaxOrder; ++m) {
    bound *= theta / (m + 1);
    if (bound <= kTaylorTolerance) return m;
  }
  return kMaxOrder;
}

FactorPlan plan_factor(const std::vector<Block>& blocks, const SpectralEnvelope& env,
                       const Factor& f, double tau) {
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -dmin;
  for (const Block& b : blocks) {
    if (b.ham.dim() == 0) continue;
    const Eigen::VectorXd d = b.ham.base + f.s * b.ham.slope;
    dmin = std::min(dmin, d.minCoeff());
    dmax = std::max(dmax, d.maxCoeff());
  }
  double center = 0.5 * (dmax + dmin);
  if (env.known) {
    const double lo = (1.0 - f.s) * env.lo0 + f.s * env.lo1;
    const double hi = (1.0 - f.s) * env.hi0 + f.s * env.hi1;
    center = 0.5 * (lo + hi);
  }
  // Gershgorin around the chosen centre; always valid.
  double radius = 0.0;
  for (const Block& b : blocks) {
    if (b.ham.dim() == 0) continue;
    const Eigen::VectorXd d = b.ham.base + f.s * b.ham.slope;
    radius = std::max(radius, ((d.array() - center).abs() + b.ham.row_abs.array()).maxCoeff());
  }
  if (env.known) {
    const double lo = (1.0 - f.s) * env.lo0 + f.s * env.lo1;
    const double hi = (1.0 - f.s) * env.hi0 + f.s * env.hi1;
    const double margin = 1e-9 * (1.0 + std::abs(lo) + std::abs(hi));
    radius = std::min(radius, 0.5 * (hi - lo) + margin);
  }
  const double dt = f.dt * tau;
  const double theta_total = dt * radius;
  const int substeps = std::max(1, static_cast<int>(std::ceil(theta_total / kMaxTheta)));
  const double theta = theta_total / substeps;
  return FactorPlan{f.s, center, dt / substeps, substeps, taylor_order(theta), f.step};
}

// Evolves the identity of one block; returns the block propagator without
// the global phase.
Eigen::MatrixXcd evolve_block(const Block& blk, const std::vector<FactorPlan>& plans,
                              const PropagateOptions& options, const simd::KernelTable& kernels) {
  const std::size_t dim = blk.ham.dim();
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  if (dim == 0) return out;
  const RampedHamiltonian& ham = blk.ham;
  const simd::CsrView view{ham.off_diagonal.row_offsets.data(), ham.off_diagonal.columns.data(),
                           ham.off_diagonal.values.data(), dim};

  const std::size_t block = static_cast<std::size_t>(options.block_columns);
  std::vector<double> x, acc, term_a, term_b, diag(dim);
  for (std::size_t c0 = 0; c0 < dim; c0 += block) {
    const std::size_t cols = std::min(block, dim - c0);
    const std::size_t width = 2 * cols;
    const std::size_t n = dim * width;
    x.assign(n, 0.0);
    acc.resize(n);
    term_a.resize(n);
    term_b.resize(n);
    for (std::size_t j = 0; j < cols; ++j) x[(c0 + j) * width + 2 * j] = 1.0;

    for (std::size_t f = 0; f < plans.size(); ++f) {
      const FactorPlan& p = plans[f];
      for (std::size_t r = 0; r < dim; ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        diag[r] = ham.base[i] + p.s * ham.slope[i] - p.center;
      }
      for (int sub = 0; sub < p.substeps; ++sub) {
        std::memcpy(acc.data(), x.data(), n * sizeof(double));
        const double* src = x.data();
        for (int k = 1; k <= p.order; ++k) {
          double* dst = (k % 2 == 1) ? term_a.data() : term_b.data();
          kernels.taylor_term(view, diag.data(), p.sub_dt / k, src, dst, acc.data(), width);
          src = dst;
        }
        std::swap(x, acc);
      }
      const bool last_of_step = f + 1 == plans.size() || plans[f + 1].step != p.step;
      if (p.step == options.fault_step && last_of_step) kernels.scale(0.5, x.data(), n);
    }

    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t j = 0; j < cols; ++j) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c0 + j)) =
            std::complex<double>(x[r * width + 2 * j], x[r * width + 2 * j + 1]);
      }
    }
  }
  return out;
}

}  // namespace

double Propagator::unitarity_error() const {
  const auto n = matrix.rows();
  return (matrix.adjoint() * matrix - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

Propagator propagate(const ChainSpec& spec, const SectorBasis& basis, const DriveProtocol& drive,
                     int steps, const PropagateOptions& options) {
  spec.validate();
  drive.validate();
  if (steps < 1) throw DomainError("step count must be at least 1");
  if (drive.sites() != spec.sites || basis.sites() != spec.sites) {
    throw DomainError("drive, basis and chain disagree on the number of sites");
  }
  if (options.block_columns < 1) throw DomainError("block_columns must be positive");
  const simd::KernelTable& kernels = options.kernels ? *options.kernels : simd::active_kernels();

  const RampedHamiltonian ham = ramped_hamiltonian(spec, basis, drive);
  const std::size_t dim = basis.dim();
  const std::vector<Block> blocks = spec.n_up == spec.n_down && options.use_symmetry
                                        ? spin_flip_blocks(basis, ham)
                                        : std::vector<Block>{whole_space(ham)};
  const SpectralEnvelope env = spectral_envelope(blocks);

  std::vector<FactorPlan> plans;
  double phase = 0.0;
  for (const Factor& f : schedule(options.integrator, steps)) {
    plans.push_back(plan_factor(blocks, env, f, drive.tau));
    phase += plans.back().center * plans.back().sub_dt * plans.back().substeps;
  }
  const std::complex<double> global_phase = std::polar(1.0, -phase);

  Propagator out;
  out.steps = steps;
  out.tau = drive.tau;
  out.matrix = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const Block& blk : blocks) {
    const Eigen::MatrixXcd ub = evolve_block(blk, plans, options, kernels);
    // U += E ub E^T with E(first, q) = c1 and E(second, q) = c2.
    const auto m = static_cast<Eigen::Index>(blk.members.size());
    for (Eigen::Index q2 = 0; q2 < m; ++q2) {
      const Member& b = blk.members[static_cast<std::size_t>(q2)];
      for (Eigen::Index q1 = 0; q1 < m; ++q1) {
        const Member& a = blk.members[static_cast<std::size_t>(q1)];
        const std::complex<double> z = global_phase * ub(q1, q2);
        out.matrix(a.first, b.first) += a.c1 * b.c1 * z;
        if (b.c2 != 0.0) out.matrix(a.first, b.second) += a.c1 * b.c2 * z;
        if (a.c2 != 0.0) {
          out.matrix(a.second, b.first) += a.c2 * b.c1 * z;
          if (b.c2 != 0.0) out.matrix(a.second, b.second) += a.c2 * b.c2 * z;
        }
      }
    }
  }

  if (options.verify_unitarity) {
    const double err = out.unitarity_error();
    if (!(err <= options.unitarity_tolerance)) {
      throw NumericalFailure("propagator is not unitary: max|U^dagger U - I| = " +
                             std::to_string(err));
    }
  }
  return out;
}

ConvergedPropagator converged_propagate(const ChainSpec& spec, const SectorBasis& basis,
                                        const DriveProtocol& drive, std::span<const double> betas,
                                        double tol, const ConvergenceOptions& options) {
  if (!(tol > 0.0)) throw DomainError("convergence tolerance must be positive");
  if (options.base_steps < 1 || options.max_doublings < 1) {
    throw DomainError("base_steps and max_doublings must be positive");
  }
  if (betas.empty()) throw DomainError("at least one beta is needed for the probe");

  const HamiltonianMatrix h0 = assemble_hamiltonian(basis, spec, initial_potential(drive));
  const HamiltonianMatrix hf = assemble_hamiltonian(basis, spec, final_potential(drive));
  const Spectrum s0 = diagonalize(h0);
  std::vector<Eigen::VectorXd> pops;
  for (double b : betas) pops.push_back(boltzmann_populations(s0.energies, b));

  auto probe = [&](const Propagator& p) {
    const Eigen::VectorXd e = evolved_energies(p.matrix, s0.vectors, hf);
    std::vector<double> out;
    for (const auto& w : pops) out.push_back(w.dot(e));
    return out;
  };

  int steps = options.base_steps;
  Propagator coarse = propagate(spec, basis, drive, steps, options.propagate);
  auto coarse_probe = probe(coarse);
  double change = 0.0;
  for (int d = 0; d < options.max_doublings; ++d) {
    Propagator fine = propagate(spec, basis, drive, 2 * steps, options.propagate);
    auto fine_probe = probe(fine);
    change = 0.0;
    for (std::size_t i = 0; i < fine_probe.size(); ++i) {
      change = std::max(change, std::abs(fine_probe[i] - coarse_probe[i]));
    }
    if (change < tol) return ConvergedPropagator{std::move(coarse), std::move(coarse_probe), change};
    steps *= 2;
    coarse = std::move(fine);
    coarse_probe = std::move(fine_probe);
  }
  throw ConvergenceError("propagator did not converge to " + std::to_string(tol) + " within " +
                         std::to_string(options.max_doublings) + " doublings (last change " +
                         std::to_string(change) + ")");
}

}  // namespace qwork
