#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qwork/approximations.hpp"
#include "qwork/drive.hpp"
#include "qwork/propagator.hpp"
#include "qwork/thermo.hpp"

namespace qwork {

// Evenly spaced values a, ..., b (count >= 1; count == 1 gives {a}).
std::vector<double> linspace(double a, double b, int count);

struct SweepConfig {
  int sites = 6;
  std::vector<DriveKind> drives;
  std::vector<double> temperatures;  // J / k_B
  std::vector<double> interactions;  // U in J
  std::vector<double> taus;          // 1 / J
  int steps = 2000;
  std::optional<double> tolerance;   // "auto(tol)": step doubling instead of fixed steps
  std::vector<Method> methods;
  std::string output = "sweep.csv";
  int threads = 0;                   // 0: one per hardware thread

  // Half filling, T {0.2, 2.5, 20}, U 0..10 (21 points), tau 0.5..10 (20
  // points), all drives and methods, 2000 steps.
  static SweepConfig standard_preset(int sites);

  void validate() const;
  // Deterministic key = value rendering; the provenance hash is taken over it.
  std::string canonical() const;
  std::size_t cell_count() const;
};

// Flat "key = value" text, '#' starts a comment. Keys: L, drives,
// temperatures, U_values | U_range + U_count, tau_values | tau_range +
// tau_count, steps (integer or auto(tol)) | tol, methods, output, threads.
// Missing grid keys fall back to the standard preset. Throws ParseError.
SweepConfig parse_sweep_config(std::string_view text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

struct Provenance {
  std::string config_hash;
  std::string code_version;
  std::string config_text;
  std::string started;  // UTC, ISO 8601
  std::string finished;
  double wall_seconds = 0.0;
  int threads = 0;

  bool operator==(const Provenance&) const = default;
};

struct SweepResult {
  std::vector<WorkEntropyRecord> records;  // sorted by (drive, T, U, tau, method)
  Provenance provenance;

  bool operator==(const SweepResult&) const = default;
};

struct SweepOptions {
  // Overrides SweepConfig::threads when positive.
  int threads = 0;
  // Off: every temperature rebuilds its propagators (for cache checks).
  bool cache_propagators = true;
  PropagateOptions propagate{};
  ConvergenceOptions convergence{};
  InitialTerm initial_term = InitialTerm::Trace;
  // Called from worker threads after each propagator task: (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

// Any cell failure aborts the sweep with a NumericalFailure naming the cell.
SweepResult run_sweep(const SweepConfig& config, const SweepOptions& options = {});

// Record order used for output: drive name, T, U, tau, method name.
bool record_key_less(const WorkEntropyRecord& a, const WorkEntropyRecord& b);

std::string_view csv_header();
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// Writes the CSV and its JSON sidecar. Throws IoError.
void persist(const SweepResult& result, const std::filesystem::path& csv);
// Reads both back; a missing sidecar leaves the provenance empty. Throws
// ParseError (with line numbers) on malformed content, IoError when the CSV
// cannot be read.
SweepResult load(const std::filesystem::path& csv);
SweepResult parse_csv(std::string_view text);

struct Extremum {
  double value = 0.0;
  std::optional<double> interaction;  // empty: the value holds for all U
  double tau = 0.0;
};

struct SummaryRow {
  DriveKind drive = DriveKind::Custom;
  double temperature = 0.0;
  Method method = Method::Exact;
  Extremum work_min, work_max;  // extracted work
  Extremum entropy_min, entropy_max;
};

SummaryRow summarize_group(const std::vector<const WorkEntropyRecord*>& group);
std::vector<SummaryRow> summarize(const SweepResult& result);

enum class Quantity { ExtractedWork, Entropy, FreeEnergy };

// (U rows) x (tau columns) slice for one (drive, T, method). Throws
// DomainError when the slice is not a complete grid.
Grid extract_grid(const SweepResult& result, DriveKind drive, double temperature, Method method,
                  Quantity quantity);

}  // namespace qwork
