#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qwork {

enum class DriveKind { Comb, MiddleIsland, AppliedElectricField, Custom };

// "comb", "mi", "aef", "custom".
std::string_view drive_name(DriveKind kind);
std::optional<DriveKind> parse_drive_kind(std::string_view name);

// Per-site linear ramp v_i(t) = mu0_i + mutau_i * t / tau, so the potential
// at t = tau is mu0 + mutau and the final Hamiltonian does not depend on tau.
struct DriveProtocol {
  DriveKind kind = DriveKind::Custom;
  std::vector<double> mu0;
  std::vector<double> mutau;
  double tau = 1.0;

  int sites() const { return static_cast<int>(mu0.size()); }
  void validate() const;
};

// Preset coefficient vectors (sites labelled 1..L in the formulas):
//   comb: mu0_i = 0.5 (-1)^i,            mutau_i = 4.5 (-1)^i
//   mi:   mu0_i = 0.5, mutau_i = 10 on i = L/2, L/2 + 1, zero elsewhere
//   aef:  mu0_i = 2 (0.5) i / L - 0.5,   mutau_i = 2 (10) i / L - 10
DriveProtocol build_drive(DriveKind kind, int sites, double tau = 1.0);

DriveProtocol custom_drive(std::vector<double> mu0, std::vector<double> mutau, double tau);

std::vector<double> potential_at(const DriveProtocol& drive, double t);
std::vector<double> initial_potential(const DriveProtocol& drive);
std::vector<double> final_potential(const DriveProtocol& drive);

// The same ramp restricted to [0, fraction * tau] (head) or [fraction * tau, tau]
// (tail), re-expressed as a drive that starts at t = 0.
DriveProtocol head_of(const DriveProtocol& drive, double fraction);
DriveProtocol tail_of(const DriveProtocol& drive, double fraction);

}  // namespace qwork
