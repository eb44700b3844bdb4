#include "qwork/drive.hpp"

#include <cmath>

#include "qwork/errors.hpp"

namespace qwork {

std::string_view drive_name(DriveKind kind) {
  switch (kind) {
    case DriveKind::Comb: return "comb";
    case DriveKind::MiddleIsland: return "mi";
    case DriveKind::AppliedElectricField: return "aef";
    case DriveKind::Custom: return "custom";
  }
  return "custom";
}

std::optional<DriveKind> parse_drive_kind(std::string_view name) {
  if (name == "comb") return DriveKind::Comb;
  if (name == "mi") return DriveKind::MiddleIsland;
  if (name == "aef") return DriveKind::AppliedElectricField;
  if (name == "custom") return DriveKind::Custom;
  return std::nullopt;
}

void DriveProtocol::validate() const {
  if (mu0.size() != mutau.size()) {
    throw DomainError("mu0 has " + std::to_string(mu0.size()) + " sites, mutau has " +
                      std::to_string(mutau.size()));
  }
  if (mu0.size() < 2) throw DomainError("a drive needs at least two sites");
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw DomainError("drive time tau must be positive and finite");
  }
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    if (!std::isfinite(mu0[i]) || !std::isfinite(mutau[i])) {
      throw DomainError("drive coefficients must be finite");
    }
  }
}

DriveProtocol build_drive(DriveKind kind, int sites, double tau) {
  if (sites < 2) throw DomainError("a drive needs at least two sites");
  DriveProtocol d;
  d.kind = kind;
  d.tau = tau;
  d.mu0.assign(sites, 0.0);
  d.mutau.assign(sites, 0.0);
  const double L = sites;
  switch (kind) {
    case DriveKind::Comb:
      for (int i = 1; i <= sites; ++i) {
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        d.mu0[i - 1] = 0.5 * sign;
        d.mutau[i - 1] = 4.5 * sign;
      }
      break;
    case DriveKind::MiddleIsland:
      if (sites % 2 != 0) {
        throw DomainError("middle-island drive needs an even chain, got L = " +
                          std::to_string(sites));
      }
      for (int i : {sites / 2, sites / 2 + 1}) {
        d.mu0[i - 1] = 0.5;
        d.mutau[i - 1] = 10.0;
      }
      break;
    case DriveKind::AppliedElectricField:
      for (int i = 1; i <= sites; ++i) {
        d.mu0[i - 1] = 2.0 * 0.5 / L * i - 0.5;
        d.mutau[i - 1] = 2.0 * 10.0 / L * i - 10.0;
      }
      break;
    case DriveKind::Custom:
      throw DomainError("custom drives are built from explicit mu0/mutau vectors");
  }
  d.validate();
  return d;
}

DriveProtocol custom_drive(std::vector<double> mu0, std::vector<double> mutau, double tau) {
  DriveProtocol d{DriveKind::Custom, std::move(mu0), std::move(mutau), tau};
  d.validate();
  return d;
}

std::vector<double> potential_at(const DriveProtocol& drive, double t) {
  drive.validate();
  if (!(t >= 0.0 && t <= drive.tau)) {
    throw DomainError("time " + std::to_string(t) + " lies outside [0, " +
                      std::to_string(drive.tau) + "]");
  }
  const double s = t / drive.tau;
  std::vector<double> v(drive.mu0.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = drive.mu0[i] + drive.mutau[i] * s;
  return v;
}

std::vector<double> initial_potential(const DriveProtocol& drive) { return potential_at(drive, 0.0); }

std::vector<double> final_potential(const DriveProtocol& drive) {
  drive.validate();
  std::vector<double> v(drive.mu0.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = drive.mu0[i] + drive.mutau[i];
  return v;
}

DriveProtocol head_of(const DriveProtocol& drive, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in (0, 1]");
  DriveProtocol d = drive;
  d.kind = DriveKind::Custom;
  d.tau = drive.tau * fraction;
  for (auto& m : d.mutau) m *= fraction;
  d.validate();
  return d;
}

DriveProtocol tail_of(const DriveProtocol& drive, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw DomainError("fraction must lie in [0, 1)");
  DriveProtocol d = drive;
  d.kind = DriveKind::Custom;
  d.tau = drive.tau * (1.0 - fraction);
  for (std::size_t i = 0; i < d.mu0.size(); ++i) {
    d.mu0[i] = drive.mu0[i] + drive.mutau[i] * fraction;
    d.mutau[i] = drive.mutau[i] * (1.0 - fraction);
  }
  d.validate();
  return d;
}

}  // namespace qwork
