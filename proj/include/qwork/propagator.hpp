#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qwork/drive.hpp"
#include "qwork/lattice.hpp"

namespace qwork {

namespace simd {
struct KernelTable;
}

// Time-ordered evolution operator over [0, tau] for one drive.
struct Propagator {
  Eigen::MatrixXcd matrix;
  int steps = 0;
  double tau = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
  double unitarity_error() const;  // max |U^dagger U - I|
};

enum class Integrator {
  // One exact exponential per step, Hamiltonian sampled at the step midpoint.
  Midpoint,
  // Fourth-order commutator-free pair of exponentials per step. For a
  // Hamiltonian linear in t the pair reduces to half-steps sampled at
  // t + dt/6 and t + 5 dt/6.
  CommutatorFree4,
};

struct PropagateOptions {
  Integrator integrator = Integrator::Midpoint;
  bool verify_unitarity = true;
  double unitarity_tolerance = 1e-9;
  // Columns advanced together through all steps; the working set of
  // 4 * dim * block_columns complex numbers should stay cache resident.
  int block_columns = 16;
  // Split the sector by spin exchange when n_up == n_down.
  bool use_symmetry = true;
  // Test hook: multiply the factor of this step by 1/2 (breaks unitarity).
  int fault_step = -1;
  // nullptr selects simd::active_kernels().
  const simd::KernelTable* kernels = nullptr;
};

// H(t) = hopping + U * double occupancy + diag(sum_i v_i(t) n_i) in the basis.
// Each step factor exp(-i H dt) is evaluated to double precision with a
// truncated Taylor series on the sparse Hamiltonian: the diagonal is shifted
// to the centre of its spectral range and the order follows a norm bound
// (endpoint spectra for small sectors, Gershgorin otherwise).
Propagator propagate(const ChainSpec& spec, const SectorBasis& basis, const DriveProtocol& drive,
                     int steps, const PropagateOptions& options = {});

struct ConvergenceOptions {
  int base_steps = 250;
  int max_doublings = 6;
  // Fourth order reaches tight tolerances in a few doublings; midpoint needs
  // tens of thousands of steps for 1e-9 at tau = 10.
  PropagateOptions propagate{.integrator = Integrator::CommutatorFree4};
};

struct ConvergedPropagator {
  Propagator propagator;
  // Probe Tr[U rho0 U^dagger H_f] per requested beta, at the accepted steps.
  std::vector<double> probe;
  // Largest probe change between the accepted steps and twice as many.
  double change = 0.0;
};

// Doubles the step count from base_steps until the probe moves by less than
// tol; returns the coarsest accepted propagator. Throws ConvergenceError after
// max_doublings without success.
ConvergedPropagator converged_propagate(const ChainSpec& spec, const SectorBasis& basis,
                                        const DriveProtocol& drive, std::span<const double> betas,
                                        double tol, const ConvergenceOptions& options = {});

}  // namespace qwork
