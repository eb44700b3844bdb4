#pragma once

// At U = 0 the sector dynamics factorize into single-particle orbitals: a
// Slater determinant built from orbitals phi_k of h(0) evolves orbital by
// orbital, and the canonical (fixed N) ensemble is a sum over occupied subsets.
// Everything here works with L x L matrices only and never touches the
// many-body code.

#include <bit>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qwork/drive.hpp"

namespace oracle {

using cplx = std::complex<double>;

inline Eigen::MatrixXd one_body(const std::vector<double>& v, double hopping) {
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    h(i, i) = v[static_cast<std::size_t>(i)];
    if (i + 1 < n) h(i, i + 1) = h(i + 1, i) = -hopping;
  }
  return h;
}

inline Eigen::MatrixXcd one_body_midpoint(const qwork::DriveProtocol& d, int steps) {
  const double dt = d.tau / steps;
  const auto n = static_cast<Eigen::Index>(d.sites());
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(n, n);
  for (int k = 0; k < steps; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(one_body(qwork::potential_at(d, (k + 0.5) * dt), 1.0));
    Eigen::VectorXcd ph(n);
    for (Eigen::Index i = 0; i < n; ++i) ph[i] = std::exp(cplx(0.0, -dt * es.eigenvalues()[i]));
    const Eigen::MatrixXcd vec = es.eigenvectors().cast<cplx>();
    u = vec * ph.asDiagonal() * vec.adjoint() * u;
  }
  return u;
}

inline std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  for (unsigned m = 0; m < (1u << n); ++m) {
    if (std::popcount(m) != k) continue;
    std::vector<int> s;
    for (int i = 0; i < n; ++i) {
      if ((m >> i) & 1u) s.push_back(i);
    }
    out.push_back(s);
  }
  return out;
}

inline double subset_sum(const Eigen::VectorXd& x, const std::vector<int>& s) {
  double t = 0.0;
  for (int i : s) t += x[i];
  return t;
}

struct OneBodyResult {
  double work = 0.0;
  double delta_f = 0.0;
};

inline OneBodyResult one_body_oracle(const qwork::DriveProtocol& d, double beta, int steps) {
  const int sites = d.sites();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s0(one_body(qwork::initial_potential(d), 1.0));
  const Eigen::MatrixXd hf = one_body(qwork::final_potential(d), 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sf(hf);
  const Eigen::MatrixXcd u = one_body_midpoint(d, steps);
  const Eigen::MatrixXcd evolved = u * s0.eigenvectors().cast<cplx>();
  Eigen::VectorXd g(sites);
  for (int k = 0; k < sites; ++k) {
    g[k] = (evolved.col(k).adjoint() * hf.cast<cplx>() * evolved.col(k))(0, 0).real();
  }

  const auto sets = subsets(sites, sites / 2);
  const double e_min = 2 * subset_sum(s0.eigenvalues(), sets.front());
  double z0 = 0.0;
  double zf = 0.0;
  double w = 0.0;
  const double ef_min = 2 * subset_sum(sf.eigenvalues(), sets.front());
  for (const auto& up : sets) {
    for (const auto& down : sets) {
      const double e = subset_sum(s0.eigenvalues(), up) + subset_sum(s0.eigenvalues(), down);
      const double weight = std::exp(-beta * (e - e_min));
      z0 += weight;
      w += weight * (subset_sum(g, up) + subset_sum(g, down) - e);
      const double ef = subset_sum(sf.eigenvalues(), up) + subset_sum(sf.eigenvalues(), down);
      zf += std::exp(-beta * (ef - ef_min));
    }
  }
  return {w / z0, (ef_min - e_min) - std::log(zf / z0) / beta};
}

}  // namespace oracle
