#include <doctest.h>

#include <cmath>

#include "one_body.hpp"
#include "qwork/approximations.hpp"

using namespace qwork;
using oracle::one_body;
using oracle::one_body_oracle;
using oracle::OneBodyResult;

TEST_CASE("U = 0 work and free energy match the one-body oracle") {
  const int steps = 200;
  for (int sites : {2, 4}) {
    for (auto kind : {DriveKind::Comb, DriveKind::MiddleIsland, DriveKind::AppliedElectricField}) {
      for (double tau : {0.5, 3.0}) {
        for (double beta : {5.0, 0.4, 0.05}) {
          const DriveProtocol d = build_drive(kind, sites, tau);
          const OneBodyResult ref = one_body_oracle(d, beta, steps);
          ApproxOptions o;
          o.steps = steps;
          INFO("L=" << sites << " " << drive_name(kind) << " tau=" << tau << " beta=" << beta);
          const auto exact = approx_work(ApproximationScheme::from_method(Method::Exact),
                                         ChainSpec::half_filled(sites, 0.0), d, beta, o);
          CHECK(std::abs(exact.work - ref.work) < 1e-8);
          CHECK(std::abs(exact.delta_f - ref.delta_f) < 1e-8);
          // NI ignores U entirely
          const auto ni = approx_work(ApproximationScheme::from_method(Method::NonInteracting),
                                      ChainSpec::half_filled(sites, 6.0), d, beta, o);
          CHECK(std::abs(ni.work - ref.work) < 1e-8);
          CHECK(std::abs(ni.delta_f - ref.delta_f) < 1e-8);
        }
      }
    }
  }
}

TEST_CASE("U = 0 ground-state energy is the sum of the lowest orbital energies per spin") {
  for (int sites : {2, 4, 6}) {
    const DriveProtocol d = build_drive(DriveKind::AppliedElectricField, sites, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(one_body(initial_potential(d), 1.0));
    const double expected = 2 * es.eigenvalues().head(sites / 2).sum();
    const ChainSpec spec = ChainSpec::half_filled(sites, 0.0);
    const SectorBasis basis = build_sector_basis(spec);
    const Endpoints e = build_endpoints(spec, basis, d, Model::Exact);
    CHECK(e.s0.energies[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}
