#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qwork/drive.hpp"
#include "qwork/lattice.hpp"
#include "qwork/propagator.hpp"
#include "qwork/spectra.hpp"
#include "qwork/thermo.hpp"

namespace qwork {

// Which Hamiltonian a stage uses: the full one or the one with U removed.
enum class Model { Exact, NonInteracting };

// Initial state from `is`, evolution and both measurement Hamiltonians from
// `evo`. Supported: (exact, exact), (NI, NI), (exact, NI).
struct ApproximationScheme {
  Model is = Model::Exact;
  Model evo = Model::Exact;

  static ApproximationScheme from_method(Method method);
  bool supported() const { return !(is == Model::NonInteracting && evo == Model::Exact); }
  // Throws DomainError for the unsupported (NI, exact) pairing.
  Method method() const;
};

// The t = 0 term of the exact+NI work.
enum class InitialTerm {
  Trace,        // Tr[rho0_exact H0_NI]
  IndexPaired,  // sum_n p_n E_n(H0_NI), levels paired by ascending index
};

ChainSpec model_spec(const ChainSpec& spec, Model model);

// Both ends of a ramp for one model, diagonalised.
struct Endpoints {
  Model model = Model::Exact;
  HamiltonianMatrix h0;
  HamiltonianMatrix hf;
  Spectrum s0;
  Spectrum sf;
};

Endpoints build_endpoints(const ChainSpec& spec, const SectorBasis& basis,
                          const DriveProtocol& drive, Model model);

// Per-level pieces of the work for one (scheme, drive, U, tau): with p the
// Boltzmann weights of `levels`, <W> = p . (final - initial).
struct WorkProfile {
  Eigen::VectorXd levels;
  Eigen::VectorXd initial;
  Eigen::VectorXd final;

  double work(const Eigen::VectorXd& populations) const;
};

// `initial_state` provides rho0 (its model must be scheme.is); `evolution`
// provides H0, Hf (model scheme.evo) and `prop` must be generated by the same
// model, so a final Hamiltonian is never mixed with another model's dynamics.
WorkProfile work_profile(const ApproximationScheme& scheme, const Endpoints& initial_state,
                         const Endpoints& evolution, const Propagator& prop,
                         InitialTerm term = InitialTerm::Trace);

struct EntropyEstimate {
  double value = 0.0;
  bool clamped = false;
};

// exact:    beta (W - dF_exact)
// NI:       beta (W - dF_NI)
// exact+NI: max(beta (W - dF_exact), 0), clamped after the full product.
EntropyEstimate approx_entropy(const ApproximationScheme& scheme, double work, double beta,
                               double delta_f_exact, double delta_f_ni);

// Slow-ramp limit of the exact+NI work: each NI level follows its ascending
// index partner while the state keeps its overlaps with the NI eigenbasis.
double exact_ni_adiabatic_work(const Spectrum& initial_exact, const Eigen::VectorXd& populations,
                               const Spectrum& initial_ni, const Spectrum& final_ni,
                               InitialTerm term = InitialTerm::Trace);

struct ApproxOptions {
  int steps = 2000;
  // When set, the propagator is refined by step doubling to this tolerance.
  std::optional<double> tolerance;
  PropagateOptions propagate{};
  ConvergenceOptions convergence{};
  InitialTerm initial_term = InitialTerm::Trace;
};

// One cell from scratch: bases, spectra, propagator, work, free energy and
// entropy. Sweeps share these pieces across cells instead.
WorkEntropyRecord approx_work(const ApproximationScheme& scheme, const ChainSpec& spec,
                              const DriveProtocol& drive, double beta,
                              const ApproxOptions& options = {});

constexpr double kRelativeErrorFloor = 1e-9;

struct RelativeError {
  double value = 0.0;
  bool floored = false;  // |exact| < epsilon, the floor was used
};

RelativeError relative_error(double approx, double exact, double epsilon = kRelativeErrorFloor);

// Values over (U rows) x (tau columns).
struct Grid {
  std::vector<double> interactions;
  std::vector<double> taus;
  Eigen::MatrixXd values;
};

struct RelativeErrorMap {
  Eigen::MatrixXd error;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> floored;
  double epsilon = kRelativeErrorFloor;
};

// |approx - exact| / max(|exact|, epsilon) per cell. Throws DomainError when
// shapes or coordinates differ.
RelativeErrorMap relative_error_map(const Grid& approx, const Grid& exact,
                                    double epsilon = kRelativeErrorFloor);

}  // namespace qwork
