#pragma once

#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "qwork/drive.hpp"
#include "qwork/lattice.hpp"
#include "qwork/propagator.hpp"
#include "qwork/spectra.hpp"

namespace qwork {

enum class Method { Exact, NonInteracting, ExactPlusNI };

// "exact", "ni", "exact-ni".
std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

// One grid cell. Works in units of J, entropy dimensionless (k_B = 1).
struct WorkEntropyRecord {
  double work = 0.0;            // <W>
  double extracted_work = 0.0;  // -<W>
  double delta_f = 0.0;
  double delta_s = 0.0;
  double beta = 0.0;

  DriveKind drive = DriveKind::Custom;
  double temperature = 0.0;
  double interaction = 0.0;
  double tau = 0.0;
  Method method = Method::Exact;
  int steps = 0;
  bool clamped = false;      // exact+NI entropy raised to zero
  bool error_floor = false;  // |exact W_ext| below the relative-error floor

  bool operator==(const WorkEntropyRecord&) const = default;
};

// Two-point-measurement statistics: joint(n, m) = p_n |<m_f| U |n_0>|^2 with n
// indexing initial levels (rows) and m final levels (columns).
struct WorkDistribution {
  Eigen::MatrixXd joint;
  Eigen::VectorXd initial_energies;
  Eigen::VectorXd final_energies;

  double total() const { return joint.sum(); }
  // sum_{n,m} p_{n,m} (E_m^f - E_n^0)
  double first_moment() const;
  // p_{m|n} = p_{n,m} / p_n; rows with p_n == 0 are left zero.
  Eigen::MatrixXd conditional() const;
};

// U * V for complex U and real V, without promoting V to complex.
Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& v);

// e_n = <U v_n| H_f |U v_n> for every column v_n of initial_vectors.
Eigen::VectorXd evolved_energies(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& initial_vectors,
                                 const HamiltonianMatrix& hf);

// Tr[U rho0 U^dagger H_f] - Tr[rho0 H_0]. Throws NumericalFailure when the
// trace carries an imaginary residue above 1e-10.
double average_work(const ThermalState& rho0, const Propagator& prop, const HamiltonianMatrix& h0,
                    const HamiltonianMatrix& hf);

WorkDistribution work_distribution(const Spectrum& initial, const Eigen::VectorXd& populations,
                                   const Propagator& prop, const Spectrum& final);

// beta (<W> - dF). beta must be positive.
double entropy_variation(double work, double delta_f, double beta);

// Extracted work when every level follows its ascending-index partner:
// -sum_n p_n (E_n^f - E_n^0).
double adiabatic_work(const Spectrum& initial, const Eigen::VectorXd& populations,
                      const Spectrum& final);

// Tr[rho0 (H_f - H_0)], the tau -> 0 limit of <W>.
double sudden_quench_work(const ThermalState& rho0, const HamiltonianMatrix& h0,
                          const HamiltonianMatrix& hf);
// Same trace from the eigen-decomposition of rho0 (no dense rho needed).
double sudden_quench_work(const Spectrum& initial, const Eigen::VectorXd& populations,
                          const HamiltonianMatrix& h0, const HamiltonianMatrix& hf);

struct JarzynskiResult {
  double deviation = 0.0;  // |<exp(-beta W)> - exp(-beta dF)|
  double relative = 0.0;   // deviation / exp(-beta dF)
  bool pass = false;
};

JarzynskiResult jarzynski_check(const WorkDistribution& dist, double beta, double delta_f,
                                double tolerance = 1e-8);

}  // namespace qwork
