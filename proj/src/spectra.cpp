#include "qwork/spectra.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qwork/errors.hpp"

namespace qwork {

namespace {

void require_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw DomainError("inverse temperature must be finite and non-negative, got " +
                      std::to_string(beta));
  }
}

// log of sum_n exp(-beta (E_n - E_min)).
double shifted_log_sum(const Eigen::VectorXd& energies, double beta) {
  const double shift = energies.minCoeff();
  return std::log((-beta * (energies.array() - shift)).exp().sum());
}

}  // namespace

Spectrum diagonalize(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw DomainError("matrix is not square");
  const double scale = std::max(1.0, symmetric.cwiseAbs().maxCoeff());
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError("matrix is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalFailure("eigensolver did not converge");
  // Eigen returns eigenvalues in increasing order.
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

Spectrum diagonalize(const HamiltonianMatrix& h) { return diagonalize(h.dense()); }

LogPartition partition_function(const Eigen::VectorXd& energies, double beta) {
  require_beta(beta);
  if (energies.size() == 0) throw DomainError("empty spectrum");
  const double shift = energies.minCoeff();
  return LogPartition{-beta * shift + shifted_log_sum(energies, beta), shift};
}

LogPartition partition_function(const Spectrum& spectrum, double beta) {
  return partition_function(spectrum.energies, beta);
}

Eigen::VectorXd boltzmann_populations(const Eigen::VectorXd& energies, double beta) {
  require_beta(beta);
  const double shift = energies.minCoeff();
  Eigen::VectorXd w = (-beta * (energies.array() - shift)).exp();
  return w / w.sum();
}

ThermalState thermal_state(const Spectrum& spectrum, double beta) {
  ThermalState state;
  state.beta = beta;
  state.populations = boltzmann_populations(spectrum.energies, beta);
  state.rho = spectrum.vectors * state.populations.asDiagonal() * spectrum.vectors.transpose();
  return state;
}

FreeEnergyDelta free_energy_delta(const Spectrum& initial, const Spectrum& final, double beta) {
  if (initial.dim() != final.dim()) {
    throw DomainError("spectra come from sectors of different dimension");
  }
  if (std::isinf(beta) && beta > 0) {
    return FreeEnergyDelta{final.energies.minCoeff() - initial.energies.minCoeff(), false};
  }
  require_beta(beta);
  if (beta == 0.0) return FreeEnergyDelta{0.0, true};
  // Ground-state difference plus the shifted log sums, so large beta*E never cancels.
  const double shift0 = initial.energies.minCoeff();
  const double shiftf = final.energies.minCoeff();
  const double log_sum0 = shifted_log_sum(initial.energies, beta);
  const double log_sumf = shifted_log_sum(final.energies, beta);
  return FreeEnergyDelta{(shiftf - shift0) - (log_sumf - log_sum0) / beta, false};
}

double beta_from_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("temperature must be positive and finite, got " + std::to_string(temperature));
  }
  return 1.0 / temperature;
}

}  // namespace qwork
