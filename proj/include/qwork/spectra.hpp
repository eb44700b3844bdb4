#pragma once

#include <Eigen/Dense>

#include "qwork/lattice.hpp"

namespace qwork {

// Eigenpairs with energies ascending. Columns of `vectors` are the
// eigenstates; within a degenerate block the basis is whatever the solver
// returns, so only block-invariant quantities should be compared.
struct Spectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;

  std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }
};

Spectrum diagonalize(const HamiltonianMatrix& h);
Spectrum diagonalize(const Eigen::MatrixXd& symmetric);

// log Z with the minimum energy factored out: Z = exp(log_z), and
// log_z = -beta * shift + log(sum_n exp(-beta (E_n - shift))).
struct LogPartition {
  double log_z = 0.0;
  double shift = 0.0;
};

LogPartition partition_function(const Spectrum& spectrum, double beta);
LogPartition partition_function(const Eigen::VectorXd& energies, double beta);

// Boltzmann weights exp(-beta E_n) / Z, stabilised by the minimum energy.
Eigen::VectorXd boltzmann_populations(const Eigen::VectorXd& energies, double beta);

struct ThermalState {
  double beta = 0.0;
  Eigen::VectorXd populations;  // in the order of the generating Spectrum
  Eigen::MatrixXd rho;
};

ThermalState thermal_state(const Spectrum& spectrum, double beta);

struct FreeEnergyDelta {
  double value = 0.0;
  // beta == 0: Z_f = Z_0 = dim and the ratio carries no information.
  bool infinite_temperature = false;
};

// -ln(Z_f / Z_0) / beta. beta = +inf gives the ground-state energy difference.
FreeEnergyDelta free_energy_delta(const Spectrum& initial, const Spectrum& final, double beta);

// k_B = 1 in code units, temperatures in units of J.
double beta_from_temperature(double temperature);

}  // namespace qwork
