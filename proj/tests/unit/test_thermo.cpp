#include <doctest.h>

#include <cmath>
#include <random>

#include "qwork/drive.hpp"
#include "qwork/errors.hpp"
#include "qwork/lattice.hpp"
#include "qwork/propagator.hpp"
#include "qwork/spectra.hpp"
#include "qwork/thermo.hpp"

using namespace qwork;

namespace {

struct Cell {
  ChainSpec spec;
  SectorBasis basis;
  DriveProtocol drive;
  HamiltonianMatrix h0;
  HamiltonianMatrix hf;
  Spectrum s0;
  Spectrum sf;
};

Cell make_cell(int sites, double u, DriveProtocol drive) {
  const ChainSpec spec = ChainSpec::half_filled(sites, u);
  SectorBasis basis = build_sector_basis(spec);
  HamiltonianMatrix h0 = assemble_hamiltonian(basis, spec, initial_potential(drive));
  HamiltonianMatrix hf = assemble_hamiltonian(basis, spec, final_potential(drive));
  Spectrum s0 = diagonalize(h0);
  Spectrum sf = diagonalize(hf);
  return {spec, std::move(basis), std::move(drive), std::move(h0), std::move(hf), std::move(s0),
          std::move(sf)};
}

// Random drive with coefficients of the preset magnitudes.
DriveProtocol random_drive(int sites, std::mt19937& rng) {
  std::uniform_real_distribution<double> small(-1.0, 1.0);
  std::uniform_real_distribution<double> large(-8.0, 8.0);
  std::uniform_real_distribution<double> time(0.3, 6.0);
  std::vector<double> mu0(sites), mutau(sites);
  for (int i = 0; i < sites; ++i) {
    mu0[i] = small(rng);
    mutau[i] = large(rng);
  }
  return custom_drive(mu0, mutau, time(rng));
}

}  // namespace

TEST_CASE("two-point statistics: normalization, marginals, first moment") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> pick_u(0.0, 10.0);
  std::uniform_real_distribution<double> pick_beta(0.05, 5.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int sites = trial % 3 == 0 ? 2 : 4;
    const Cell c = make_cell(sites, pick_u(rng), random_drive(sites, rng));
    const double beta = pick_beta(rng);
    const Propagator p = propagate(c.spec, c.basis, c.drive, 150);
    const ThermalState rho = thermal_state(c.s0, beta);
    const WorkDistribution dist = work_distribution(c.s0, rho.populations, p, c.sf);

    CHECK(std::abs(dist.total() - 1.0) < 1e-12);
    CHECK((dist.joint.rowwise().sum() - rho.populations).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(dist.joint.minCoeff() >= 0.0);
    const Eigen::MatrixXd cond = dist.conditional();
    for (Eigen::Index n = 0; n < cond.rows(); ++n) {
      if (rho.populations[n] > 0.0) CHECK(std::abs(cond.row(n).sum() - 1.0) < 1e-12);
    }

    const double trace_work = average_work(rho, p, c.h0, c.hf);
    CHECK(std::abs(dist.first_moment() - trace_work) < 1e-9);
    const Eigen::VectorXd e = evolved_energies(p.matrix, c.s0.vectors, c.hf);
    CHECK(std::abs(rho.populations.dot(e - c.s0.energies) - trace_work) < 1e-10);

    // fluctuation theorem and second law hold for any unitary
    const double df = free_energy_delta(c.s0, c.sf, beta).value;
    CHECK(jarzynski_check(dist, beta, df, 1e-9).pass);
    CHECK(entropy_variation(trace_work, df, beta) >= -1e-10);
  }
}

TEST_CASE("Jarzynski check detects a broken distribution") {
  const Cell c = make_cell(2, 1.0, build_drive(DriveKind::Comb, 2, 1.0));
  const Propagator p = propagate(c.spec, c.basis, c.drive, 100);
  const Eigen::VectorXd pop = boltzmann_populations(c.s0.energies, 1.0);
  WorkDistribution dist = work_distribution(c.s0, pop, p, c.sf);
  const double df = free_energy_delta(c.s0, c.sf, 1.0).value;
  const JarzynskiResult good = jarzynski_check(dist, 1.0, df);
  CHECK(good.pass);
  CHECK(good.relative < 1e-12);
  dist.joint *= 0.9;
  const JarzynskiResult bad = jarzynski_check(dist, 1.0, df);
  CHECK_FALSE(bad.pass);
  CHECK(bad.relative == doctest::Approx(0.1).epsilon(1e-9));
  CHECK_THROWS_AS(jarzynski_check(dist, 0.0, df), DomainError);
}

TEST_CASE("Jarzynski check stays finite at low temperature") {
  const Cell c = make_cell(4, 2.0, build_drive(DriveKind::MiddleIsland, 4, 2.0));
  const Propagator p = propagate(c.spec, c.basis, c.drive, 200);
  const double beta = 50.0;
  const Eigen::VectorXd pop = boltzmann_populations(c.s0.energies, beta);
  const WorkDistribution dist = work_distribution(c.s0, pop, p, c.sf);
  const JarzynskiResult r = jarzynski_check(dist, beta, free_energy_delta(c.s0, c.sf, beta).value);
  CHECK(std::isfinite(r.relative));
  CHECK(r.relative < 1e-8);
}

TEST_CASE("entropy variation") {
  CHECK(entropy_variation(3.0, 1.0, 0.5) == 1.0);
  CHECK_THROWS_AS(entropy_variation(1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("identical endpoints give zero work in both limits") {
  const Cell c = make_cell(4, 3.0, custom_drive({0.1, 0.2, -0.3, 0.4}, {0, 0, 0, 0}, 2.0));
  const ThermalState rho = thermal_state(c.s0, 1.0);
  CHECK(std::abs(adiabatic_work(c.s0, rho.populations, c.sf)) < 1e-12);
  CHECK(std::abs(sudden_quench_work(rho, c.h0, c.hf)) < 1e-12);
  const Propagator p = propagate(c.spec, c.basis, c.drive, 20);
  CHECK(std::abs(average_work(rho, p, c.h0, c.hf)) < 1e-12);
}

TEST_CASE("sudden-quench forms agree and bound the fast ramp") {
  const Cell c = make_cell(4, 4.0, build_drive(DriveKind::AppliedElectricField, 4, 1e-4));
  const ThermalState rho = thermal_state(c.s0, 0.4);
  const double dense_form = sudden_quench_work(rho, c.h0, c.hf);
  CHECK(sudden_quench_work(c.s0, rho.populations, c.h0, c.hf) ==
        doctest::Approx(dense_form).epsilon(1e-12));
  const Propagator p = propagate(c.spec, c.basis, c.drive, 20);
  CHECK(std::abs(average_work(rho, p, c.h0, c.hf) - dense_form) < 1e-3);
}

TEST_CASE("slow ramp approaches the level-following limit") {
  // two-site AEF at beta = 5: levels stay non-degenerate along the ramp
  const DriveProtocol fast = build_drive(DriveKind::AppliedElectricField, 2, 25.0);
  const DriveProtocol slow = build_drive(DriveKind::AppliedElectricField, 2, 200.0);
  const Cell c = make_cell(2, 4.0, fast);
  const ThermalState rho = thermal_state(c.s0, 5.0);
  const double limit = -adiabatic_work(c.s0, rho.populations, c.sf);
  const double w_fast = average_work(rho, propagate(c.spec, c.basis, fast, 2500), c.h0, c.hf);
  const double w_slow = average_work(rho, propagate(c.spec, c.basis, slow, 20000), c.h0, c.hf);
  CHECK(std::abs(w_slow - limit) < std::abs(w_fast - limit));
  CHECK(std::abs(w_slow - limit) <= 0.02 * std::abs(limit));
}

TEST_CASE("final Hamiltonian and free energy do not depend on tau") {
  for (auto kind : {DriveKind::Comb, DriveKind::MiddleIsland, DriveKind::AppliedElectricField}) {
    const Cell a = make_cell(4, 2.0, build_drive(kind, 4, 0.5));
    const Cell b = make_cell(4, 2.0, build_drive(kind, 4, 10.0));
    CHECK(a.hf.dense() == b.hf.dense());
    CHECK(free_energy_delta(a.s0, a.sf, 0.4).value == free_energy_delta(b.s0, b.sf, 0.4).value);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  const Cell a = make_cell(2, 1.0, build_drive(DriveKind::Comb, 2, 1.0));
  const Cell b = make_cell(4, 1.0, build_drive(DriveKind::Comb, 4, 1.0));
  const ThermalState rho = thermal_state(a.s0, 1.0);
  const Propagator p = propagate(b.spec, b.basis, b.drive, 5);
  CHECK_THROWS_AS(average_work(rho, p, a.h0, a.hf), DomainError);
  CHECK_THROWS_AS(work_distribution(a.s0, rho.populations, p, a.sf), DomainError);
  CHECK_THROWS_AS(adiabatic_work(a.s0, rho.populations, b.sf), DomainError);
  CHECK_THROWS_AS(sudden_quench_work(rho, a.h0, b.hf), DomainError);
}

TEST_CASE("method names round-trip") {
  for (auto m : {Method::Exact, Method::NonInteracting, Method::ExactPlusNI}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(parse_method("exact+ni") == Method::ExactPlusNI);
  CHECK_FALSE(parse_method("dft").has_value());
}
