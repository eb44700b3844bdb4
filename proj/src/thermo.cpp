#include "qwork/thermo.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "qwork/errors.hpp"

namespace qwork {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::Exact: return "exact";
    case Method::NonInteracting: return "ni";
    case Method::ExactPlusNI: return "exact-ni";
  }
  return "exact";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "exact") return Method::Exact;
  if (name == "ni") return Method::NonInteracting;
  if (name == "exact-ni" || name == "exact+ni") return Method::ExactPlusNI;
  return std::nullopt;
}

double WorkDistribution::first_moment() const {
  double sum = 0.0;
  for (Eigen::Index n = 0; n < joint.rows(); ++n) {
    for (Eigen::Index m = 0; m < joint.cols(); ++m) {
      sum += joint(n, m) * (final_energies[m] - initial_energies[n]);
    }
  }
  return sum;
}

Eigen::MatrixXd WorkDistribution::conditional() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(joint.rows(), joint.cols());
  for (Eigen::Index n = 0; n < joint.rows(); ++n) {
    const double pn = joint.row(n).sum();
    if (pn > 0.0) out.row(n) = joint.row(n) / pn;
  }
  return out;
}

Eigen::MatrixXcd multiply(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& v) {
  if (u.cols() != v.rows()) throw DomainError("matrix product dimension mismatch");
  const Eigen::MatrixXd re = u.real() * v;
  const Eigen::MatrixXd im = u.imag() * v;
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

Eigen::VectorXd evolved_energies(const Eigen::MatrixXcd& u, const Eigen::MatrixXd& initial_vectors,
                                 const HamiltonianMatrix& hf) {
  if (u.rows() != static_cast<Eigen::Index>(hf.dim())) {
    throw DomainError("propagator and Hamiltonian dimensions differ");
  }
  const Eigen::MatrixXcd w = multiply(u, initial_vectors);
  const Eigen::MatrixXcd hw = hf.apply(w);
  return (w.conjugate().cwiseProduct(hw)).colwise().sum().real().transpose();
}

double average_work(const ThermalState& rho0, const Propagator& prop, const HamiltonianMatrix& h0,
                    const HamiltonianMatrix& hf) {
  const auto n = static_cast<Eigen::Index>(h0.dim());
  if (rho0.rho.rows() != n || prop.matrix.rows() != n || hf.dim() != h0.dim()) {
    throw DomainError("state, propagator and Hamiltonians must share the sector dimension");
  }
  const Eigen::MatrixXcd& u = prop.matrix;
  const Eigen::MatrixXcd rho_f = multiply(u, rho0.rho) * u.adjoint();
  // Tr[A B] = sum_ij A_ij B_ji, and H_f is symmetric.
  const std::complex<double> final_energy = rho_f.cwiseProduct(hf.dense()).sum();
  if (std::abs(final_energy.imag()) > 1e-10) {
    throw NumericalFailure("Tr[rho_f H_f] has imaginary residue " +
                           std::to_string(final_energy.imag()));
  }
  const double initial_energy = rho0.rho.cwiseProduct(h0.dense()).sum();
  return final_energy.real() - initial_energy;
}

WorkDistribution work_distribution(const Spectrum& initial, const Eigen::VectorXd& populations,
                                   const Propagator& prop, const Spectrum& final) {
  const auto n = static_cast<Eigen::Index>(initial.dim());
  if (final.dim() != initial.dim() || populations.size() != n || prop.matrix.rows() != n) {
    throw DomainError("work distribution inputs disagree on the sector dimension");
  }
  // amplitudes(m, n) = <m_f| U |n_0>
  const Eigen::MatrixXcd evolved = multiply(prop.matrix, initial.vectors);
  Eigen::MatrixXcd amplitudes(n, n);
  amplitudes.real() = final.vectors.transpose() * evolved.real();
  amplitudes.imag() = final.vectors.transpose() * evolved.imag();
  WorkDistribution d;
  d.joint = populations.asDiagonal() * amplitudes.cwiseAbs2().transpose();
  d.initial_energies = initial.energies;
  d.final_energies = final.energies;
  return d;
}

double entropy_variation(double work, double delta_f, double beta) {
  if (!(beta > 0.0)) throw DomainError("entropy variation needs beta > 0");
  return beta * (work - delta_f);
}

double adiabatic_work(const Spectrum& initial, const Eigen::VectorXd& populations,
                      const Spectrum& final) {
  if (initial.dim() != final.dim() || populations.size() != initial.energies.size()) {
    throw DomainError("adiabatic work inputs disagree on the sector dimension");
  }
  return -populations.dot(final.energies - initial.energies);
}

double sudden_quench_work(const ThermalState& rho0, const HamiltonianMatrix& h0,
                          const HamiltonianMatrix& hf) {
  if (hf.dim() != h0.dim() || rho0.rho.rows() != static_cast<Eigen::Index>(h0.dim())) {
    throw DomainError("sudden-quench inputs disagree on the sector dimension");
  }
  return rho0.rho.cwiseProduct(hf.dense() - h0.dense()).sum();
}

double sudden_quench_work(const Spectrum& initial, const Eigen::VectorXd& populations,
                          const HamiltonianMatrix& h0, const HamiltonianMatrix& hf) {
  if (hf.dim() != h0.dim() || initial.dim() != h0.dim()) {
    throw DomainError("sudden-quench inputs disagree on the sector dimension");
  }
  const Eigen::MatrixXd dv = (hf.dense() - h0.dense()) * initial.vectors;
  const Eigen::VectorXd diag = initial.vectors.cwiseProduct(dv).colwise().sum().transpose();
  return populations.dot(diag);
}

JarzynskiResult jarzynski_check(const WorkDistribution& dist, double beta, double delta_f,
                                double tolerance) {
  if (!(beta > 0.0)) throw DomainError("Jarzynski check needs beta > 0");
  // sum p_nm exp(-beta (W_nm - dF)), accumulated in the log domain per term
  double ratio = 0.0;
  for (Eigen::Index n = 0; n < dist.joint.rows(); ++n) {
    for (Eigen::Index m = 0; m < dist.joint.cols(); ++m) {
      const double p = dist.joint(n, m);
      if (p <= 0.0) continue;
      const double w = dist.final_energies[m] - dist.initial_energies[n];
      ratio += std::exp(std::log(p) - beta * (w - delta_f));
    }
  }
  JarzynskiResult r;
  r.relative = std::abs(ratio - 1.0);
  r.deviation = r.relative * std::exp(-beta * delta_f);
  r.pass = r.relative <= tolerance;
  return r;
}

}  // namespace qwork
