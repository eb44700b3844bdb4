#include "qwork/validate.hpp"

#include <algorithm>
#include <cmath>

#include "qwork/approximations.hpp"
#include "qwork/spectra.hpp"
#include "qwork/thermo.hpp"

namespace qwork {

namespace {

struct Cell {
  int sites;
  DriveKind drive;
  double interaction;
  double tau;
};

std::vector<Cell> grid(bool quick) {
  std::vector<Cell> cells;
  const DriveKind drives[] = {DriveKind::Comb, DriveKind::MiddleIsland,
                              DriveKind::AppliedElectricField};
  for (int sites : {2, 4}) {
    for (DriveKind d : drives) {
      for (double u : {0.0, 2.0, 6.0}) {
        for (double tau : {0.5, 3.0}) cells.push_back({sites, d, u, tau});
      }
    }
  }
  if (!quick) {
    for (DriveKind d : drives) cells.push_back({6, d, 5.0, 2.0});
    cells.push_back({6, DriveKind::Comb, 1.0, 0.5});
  }
  return cells;
}

void record(CheckResult& c, double violation) {
  c.worst = std::max(c.worst, violation);
  ++c.cases;
}

}  // namespace

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ValidationReport run_validation(const ValidationOptions& options) {
  CheckResult unitarity{"unitarity", false, 0.0, 1e-9, 0};
  CheckResult normalization{"tpm-normalization", false, 0.0, 1e-10, 0};
  CheckResult moments{"work-trace-vs-tpm", false, 0.0, 1e-9, 0};
  CheckResult jarzynski{"jarzynski", false, 0.0, 1e-8, 0};
  CheckResult second_law{"second-law", false, 0.0, 1e-10, 0};
  CheckResult ni_flat{"ni-u-independence", false, 0.0, 1e-12, 0};

  const double temperatures[] = {0.2, 2.5, 20.0};

  for (const Cell& cell : grid(options.quick)) {
    const ChainSpec spec = ChainSpec::half_filled(cell.sites, cell.interaction);
    const SectorBasis basis = build_sector_basis(spec);
    const DriveProtocol drive = build_drive(cell.drive, cell.sites, cell.tau);
    const Endpoints ends = build_endpoints(spec, basis, drive, Model::Exact);

    PropagateOptions po;
    po.verify_unitarity = false;
    const Propagator prop = propagate(spec, basis, drive, 2000, po);
    record(unitarity, prop.unitarity_error());

    ConvergenceOptions co;
    co.propagate.verify_unitarity = false;
    if (options.inject_fault) co.propagate.fault_step = 0;
    std::vector<double> betas;
    for (double t : temperatures) betas.push_back(1.0 / t);
    const Propagator converged = converged_propagate(spec, basis, drive, betas, 1e-9, co).propagator;

    for (double t : temperatures) {
      const double beta = 1.0 / t;
      const ThermalState rho0 = thermal_state(ends.s0, beta);
      const WorkDistribution dist = work_distribution(ends.s0, rho0.populations, prop, ends.sf);

      double norm = std::abs(dist.total() - 1.0);
      norm = std::max(norm, (dist.joint.rowwise().sum() - rho0.populations).cwiseAbs().maxCoeff());
      norm = std::max(norm, std::max(0.0, -dist.joint.minCoeff() - 1e-14));
      const Eigen::MatrixXd cond = dist.conditional();
      for (Eigen::Index n = 0; n < cond.rows(); ++n) {
        if (rho0.populations[n] > 0.0) norm = std::max(norm, std::abs(cond.row(n).sum() - 1.0));
      }
      record(normalization, norm);

      const double w = average_work(rho0, prop, ends.h0, ends.hf);
      record(moments, std::abs(dist.first_moment() - w));

      const double df = free_energy_delta(ends.s0, ends.sf, beta).value;
      record(second_law, std::max(0.0, -entropy_variation(w, df, beta)));

      const WorkDistribution exact_dist =
          work_distribution(ends.s0, rho0.populations, converged, ends.sf);
      record(jarzynski, jarzynski_check(exact_dist, beta, df).relative);
    }
  }

  // NI work must not move with U: same drive, tau and beta, different U.
  for (DriveKind d : {DriveKind::Comb, DriveKind::MiddleIsland, DriveKind::AppliedElectricField}) {
    const DriveProtocol drive = build_drive(d, 4, 1.5);
    const auto scheme = ApproximationScheme::from_method(Method::NonInteracting);
    ApproxOptions ao;
    ao.steps = 500;
    const WorkEntropyRecord a = approx_work(scheme, ChainSpec::half_filled(4, 0.0), drive, 0.4, ao);
    for (double u : {1.0, 7.0}) {
      const WorkEntropyRecord b = approx_work(scheme, ChainSpec::half_filled(4, u), drive, 0.4, ao);
      record(ni_flat, std::max(std::abs(a.work - b.work), std::abs(a.delta_s - b.delta_s)));
    }
  }

  ValidationReport report;
  for (CheckResult* c : {&unitarity, &normalization, &moments, &jarzynski, &second_law, &ni_flat}) {
    c->pass = c->worst <= c->tolerance;
    report.checks.push_back(*c);
  }
  return report;
}

}  // namespace qwork
