// Exit criteria for the whole artifact. Prints one PASS/FAIL line per
// criterion and exits non-zero when any fails.
//
// The 6-site preset sweep takes about an hour of single-core time, so its CSV
// is cached under QWORK_ACCEPTANCE_CACHE and reused when the sidecar records
// the same configuration and code version. Delete the cache to force a rerun.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "../oracles/one_body.hpp"
#include "qwork/approximations.hpp"
#include "qwork/errors.hpp"
#include "qwork/sweep.hpp"

#ifndef QWORK_ACCEPTANCE_CACHE
#define QWORK_ACCEPTANCE_CACHE "acceptance_cache"
#endif

using namespace qwork;

namespace {

// Pinned thresholds.
constexpr double kNiSpread = 1e-12;                 // J
constexpr double kTraceVsTpm = 1e-9;                // J
constexpr int kTraceVsTpmCells = 50;
constexpr double kJarzynskiRelative = 1e-8;
constexpr double kJarzynskiConvergence = 1e-9;      // J, step-doubling probe
constexpr int kJarzynskiCells = 20;
constexpr double kJarzynskiBudget = 300.0;          // s
constexpr double kSecondLaw = -1e-10;
constexpr double kSuddenTau = 1e-4;                 // 1/J
constexpr double kSudden = 1e-3;                    // J
constexpr double kAdiabaticFraction = 0.02;
constexpr double kAdiabaticBeta = 5.0;              // 1/J
constexpr double kDfAlongTau = 1e-9;                // J
constexpr double kBandTemperature = 0.2;
constexpr double kBandMaxU = 9.0;
constexpr double kBandRelativeError = 0.25;
constexpr double kBandFraction = 0.80;
constexpr double kLargePresetBudget = 3600.0;       // s on 8 cores
constexpr double kReferenceCores = 8.0;
constexpr double kSmallPresetBudget = 60.0;         // s
constexpr double kOracle = 1e-8;                    // J

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const std::vector<DriveKind> kDrives = {DriveKind::Comb, DriveKind::MiddleIsland,
                                        DriveKind::AppliedElectricField};

struct Presets {
  SweepResult large;  // 6 sites
  SweepResult small;  // 2 sites
  double large_wall = 0.0;
  int large_threads = 0;
  double small_wall = 0.0;
  bool large_cached = false;
};

Presets load_presets() {
  Presets p;
  namespace fs = std::filesystem;
  const fs::path dir(QWORK_ACCEPTANCE_CACHE);
  fs::create_directories(dir);
  const fs::path csv = dir / "preset_L6.csv";
  const SweepConfig large = SweepConfig::standard_preset(6);
  bool reuse = false;
  if (fs::exists(csv) && fs::exists(sidecar_path(csv))) {
    try {
      p.large = load(csv);
      reuse = p.large.provenance.config_text == large.canonical() &&
              p.large.provenance.code_version == QWORK_VERSION &&
              p.large.records.size() == large.cell_count();
    } catch (const std::exception& e) {
      std::cerr << "ignoring cache: " << e.what() << "\n";
    }
  }
  if (!reuse) {
    std::cerr << "running the 6-site preset (" << large.cell_count() << " records)...\n";
    SweepOptions o;
    o.progress = [](std::size_t done, std::size_t total) {
      if (done % 50 == 0 || done == total) std::cerr << "  " << done << "/" << total << "\n";
    };
    p.large = run_sweep(large, o);
    persist(p.large, csv);
  }
  p.large_cached = reuse;
  p.large_wall = p.large.provenance.wall_seconds;
  p.large_threads = p.large.provenance.threads;

  const auto start = std::chrono::steady_clock::now();
  p.small = run_sweep(SweepConfig::standard_preset(2));
  p.small_wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

struct Cell {
  DriveKind drive;
  double temperature;
  double interaction;
  double tau;
};

std::vector<Cell> sample_cells(const SweepConfig& c, int count, unsigned seed) {
  std::mt19937 rng(seed);
  auto pick = [&](const auto& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  std::vector<Cell> out;
  for (int k = 0; k < count; ++k) {
    out.push_back({pick(c.drives), pick(c.temperatures), pick(c.interactions), pick(c.taus)});
  }
  return out;
}

// ---------------------------------------------------------------------------

Outcome ni_u_independence(const Presets& p) {
  double worst = 0.0;
  for (double t : SweepConfig::standard_preset(6).temperatures) {
    const Grid g = extract_grid(p.large, DriveKind::Comb, t, Method::NonInteracting,
                                Quantity::ExtractedWork);
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      worst = std::max(worst, g.values.col(j).maxCoeff() - g.values.col(j).minCoeff());
    }
  }
  return {worst < kNiSpread, "max spread along U " + fmt(worst) + " J"};
}

Outcome trace_vs_tpm() {
  const SweepConfig c = SweepConfig::standard_preset(6);
  const ChainSpec base = ChainSpec::half_filled(6, 0.0);
  const SectorBasis basis = build_sector_basis(base);
  double worst = 0.0;
  for (const Cell& cell : sample_cells(c, kTraceVsTpmCells, 20240601u)) {
    ChainSpec spec = base;
    spec.interaction = cell.interaction;
    const DriveProtocol d = build_drive(cell.drive, 6, cell.tau);
    const Endpoints e = build_endpoints(spec, basis, d, Model::Exact);
    const Propagator u = propagate(spec, basis, d, c.steps);
    const ThermalState rho = thermal_state(e.s0, 1.0 / cell.temperature);
    const double trace = average_work(rho, u, e.h0, e.hf);
    const double tpm = work_distribution(e.s0, rho.populations, u, e.sf).first_moment();
    worst = std::max(worst, std::abs(trace - tpm));
  }
  return {worst < kTraceVsTpm,
          std::to_string(kTraceVsTpmCells) + " random 6-site cells, max |diff| " + fmt(worst) + " J"};
}

Outcome jarzynski() {
  const auto start = std::chrono::steady_clock::now();
  const SweepConfig c = SweepConfig::standard_preset(6);
  const ChainSpec base = ChainSpec::half_filled(6, 0.0);
  const SectorBasis basis = build_sector_basis(base);
  double worst = 0.0;
  for (const Cell& cell : sample_cells(c, kJarzynskiCells, 77u)) {
    ChainSpec spec = base;
    spec.interaction = cell.interaction;
    const DriveProtocol d = build_drive(cell.drive, 6, cell.tau);
    const Endpoints e = build_endpoints(spec, basis, d, Model::Exact);
    const double beta = 1.0 / cell.temperature;
    const double betas[] = {beta};
    const Propagator u =
        converged_propagate(spec, basis, d, betas, kJarzynskiConvergence).propagator;
    const Eigen::VectorXd pop = boltzmann_populations(e.s0.energies, beta);
    const WorkDistribution dist = work_distribution(e.s0, pop, u, e.sf);
    const double df = free_energy_delta(e.s0, e.sf, beta).value;
    worst = std::max(worst, jarzynski_check(dist, beta, df, kJarzynskiRelative).relative);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= kJarzynskiRelative && wall < kJarzynskiBudget,
          std::to_string(kJarzynskiCells) + " converged 6-site cells, max relative deviation " +
              fmt(worst) + ", " + fmt(wall) + " s"};
}

Outcome second_law(const Presets& p) {
  double worst = INFINITY;
  std::size_t n = 0;
  for (const auto& r : p.large.records) {
    if (r.method != Method::Exact) continue;
    worst = std::min(worst, r.delta_s);
    ++n;
  }
  return {worst >= kSecondLaw && n > 0, std::to_string(n) + " exact cells, min dS " + fmt(worst)};
}

Outcome sudden_quench() {
  double worst = 0.0;
  int cases = 0;
  for (int sites : {2, 6}) {
    const SectorBasis basis = build_sector_basis(ChainSpec::half_filled(sites, 0.0));
    for (DriveKind kind : kDrives) {
      const DriveProtocol d = build_drive(kind, sites, kSuddenTau);
      for (double u : {0.0, 5.0, 10.0}) {
        const ChainSpec spec = ChainSpec::half_filled(sites, u);
        const Endpoints exact = build_endpoints(spec, basis, d, Model::Exact);
        const Endpoints ni = build_endpoints(spec, basis, d, Model::NonInteracting);
        const Propagator u_exact = propagate(spec, basis, d, 20);
        const Propagator u_ni = propagate(model_spec(spec, Model::NonInteracting), basis, d, 20);
        for (double t : {0.2, 2.5, 20.0}) {
          const ThermalState rho = thermal_state(exact.s0, 1.0 / t);
          const double w = average_work(rho, u_exact, exact.h0, exact.hf);
          worst = std::max(worst, std::abs(w - sudden_quench_work(rho, exact.h0, exact.hf)));
          const double w_mixed = average_work(rho, u_ni, ni.h0, ni.hf);
          worst = std::max(worst, std::abs(w_mixed - sudden_quench_work(rho, ni.h0, ni.hf)));
          cases += 2;
        }
      }
    }
  }
  return {worst < kSudden, std::to_string(cases) + " cases at tau=1e-4, max |diff| " + fmt(worst) + " J"};
}

Outcome adiabatic() {
  const std::vector<double> taus = {25.0, 50.0, 100.0, 200.0};
  bool pass = true;
  std::string detail;
  for (double u : {0.0, 4.0}) {
    const ChainSpec spec = ChainSpec::half_filled(2, u);
    const SectorBasis basis = build_sector_basis(spec);
    const DriveProtocol ref_drive = build_drive(DriveKind::AppliedElectricField, 2, 1.0);
    const Endpoints exact = build_endpoints(spec, basis, ref_drive, Model::Exact);
    const Endpoints ni = build_endpoints(spec, basis, ref_drive, Model::NonInteracting);
    const Eigen::VectorXd pop = boltzmann_populations(exact.s0.energies, kAdiabaticBeta);
    const double limit_exact = -adiabatic_work(exact.s0, pop, exact.sf);
    const double limit_mixed = exact_ni_adiabatic_work(exact.s0, pop, ni.s0, ni.sf);
    for (Method m : {Method::Exact, Method::ExactPlusNI}) {
      const double limit = m == Method::Exact ? limit_exact : limit_mixed;
      std::vector<double> dev;
      for (double tau : taus) {
        ApproxOptions o;
        o.tolerance = 1e-9;
        o.convergence.max_doublings = 10;
        const auto r = approx_work(ApproximationScheme::from_method(m), spec,
                                   build_drive(DriveKind::AppliedElectricField, 2, tau),
                                   kAdiabaticBeta, o);
        dev.push_back(std::abs(r.work - limit));
      }
      const bool monotone = std::is_sorted(dev.rbegin(), dev.rend(), std::less_equal<>());
      const double rel = dev.back() / std::abs(limit);
      pass = pass && monotone && rel <= kAdiabaticFraction;
      detail += std::string(detail.empty() ? "" : "; ") + std::string(method_name(m)) + " U=" + fmt(u) +
                " rel " + fmt(rel) + (monotone ? " monotone" : " NOT monotone");
    }
  }
  return {pass, detail};
}

// Grid of exact W_ext for one (drive, T) of the 6-site preset.
Grid exact_work(const Presets& p, DriveKind d, double t) {
  return extract_grid(p.large, d, t, Method::Exact, Quantity::ExtractedWork);
}

Outcome mi_sign(const Presets& p) {
  double worst = -INFINITY;
  for (double t : SweepConfig::standard_preset(6).temperatures) {
    worst = std::max(worst, exact_work(p, DriveKind::MiddleIsland, t).values.maxCoeff());
  }
  return {worst < 0.0, "largest MI W_ext " + fmt(worst) + " J"};
}

Outcome drive_ordering(const Presets& p) {
  bool pass = true;
  std::string detail;
  for (double t : SweepConfig::standard_preset(6).temperatures) {
    const double aef = exact_work(p, DriveKind::AppliedElectricField, t).values.maxCoeff();
    const double comb = exact_work(p, DriveKind::Comb, t).values.maxCoeff();
    const double mi = exact_work(p, DriveKind::MiddleIsland, t).values.maxCoeff();
    pass = pass && aef > comb && aef > mi;
    detail += std::string(detail.empty() ? "" : "; ") + "T=" + fmt(t) + " aef " + fmt(aef) +
              " comb " + fmt(comb) + " mi " + fmt(mi);
  }
  return {pass, detail};
}

Outcome range_contraction(const Presets& p) {
  bool pass = true;
  std::string detail;
  for (DriveKind d : kDrives) {
    const Grid cold = exact_work(p, d, 0.2);
    const Grid hot = exact_work(p, d, 20.0);
    const double r_cold = cold.values.maxCoeff() - cold.values.minCoeff();
    const double r_hot = hot.values.maxCoeff() - hot.values.minCoeff();
    pass = pass && r_hot < r_cold;
    detail += std::string(detail.empty() ? "" : "; ") + std::string(drive_name(d)) + " " +
              fmt(r_cold) + " -> " + fmt(r_hot);
  }
  return {pass, detail};
}

Outcome df_tau_independence(const Presets& p) {
  double worst = 0.0;
  for (const SweepResult* r : {&p.large, &p.small}) {
    std::map<std::tuple<int, double, double, int>, std::pair<double, double>> span;
    for (const auto& rec : r->records) {
      const auto key = std::make_tuple(static_cast<int>(rec.drive), rec.temperature,
                                       rec.interaction, static_cast<int>(rec.method));
      auto [it, fresh] = span.try_emplace(key, rec.delta_f, rec.delta_f);
      it->second.first = std::min(it->second.first, rec.delta_f);
      it->second.second = std::max(it->second.second, rec.delta_f);
    }
    for (const auto& [key, s] : span) worst = std::max(worst, s.second - s.first);
  }
  return {worst <= kDfAlongTau, "max spread along tau " + fmt(worst) + " J"};
}

Outcome accuracy_band(const Presets& p) {
  const Grid exact = exact_work(p, DriveKind::Comb, kBandTemperature);
  const Grid mixed = extract_grid(p.large, DriveKind::Comb, kBandTemperature, Method::ExactPlusNI,
                                  Quantity::ExtractedWork);
  const RelativeErrorMap err = relative_error_map(mixed, exact);
  int inside = 0;
  int total = 0;
  for (std::size_t i = 0; i < exact.interactions.size(); ++i) {
    if (exact.interactions[i] > kBandMaxU + 1e-12) continue;
    for (Eigen::Index j = 0; j < err.error.cols(); ++j) {
      ++total;
      if (err.error(static_cast<Eigen::Index>(i), j) <= kBandRelativeError) ++inside;
    }
  }
  const double fraction = total ? static_cast<double>(inside) / total : 0.0;
  return {fraction >= kBandFraction,
          std::to_string(inside) + "/" + std::to_string(total) + " cells within " +
              fmt(kBandRelativeError) + " (" + fmt(100 * fraction) + "%)"};
}

Outcome entropy_clamp(const Presets& p) {
  double worst = INFINITY;
  std::size_t clamped = 0;
  for (const SweepResult* r : {&p.large, &p.small}) {
    for (const auto& rec : r->records) {
      if (rec.method != Method::ExactPlusNI) continue;
      worst = std::min(worst, rec.delta_s);
      clamped += rec.clamped;
    }
  }
  return {worst >= 0.0, "min exact+NI dS " + fmt(worst) + ", " + std::to_string(clamped) + " clamped"};
}

Outcome performance(const Presets& p) {
  // Cells are independent tasks, so the 8-core time is the single-core time
  // divided by the core count; a run that already used n threads is scaled
  // by n / 8.
  const double projected = p.large_wall * p.large_threads / kReferenceCores;
  const bool pass = projected <= kLargePresetBudget && p.small_wall <= kSmallPresetBudget;
  return {pass, "6-site " + fmt(p.large_wall) + " s on " + std::to_string(p.large_threads) +
                    " thread(s), projected " + fmt(projected) + " s on 8 cores" +
                    (p.large_cached ? " (cached run)" : "") + "; 2-site " + fmt(p.small_wall) + " s"};
}

Outcome one_body_oracle() {
  const int steps = 2000;
  double worst = 0.0;
  int cases = 0;
  for (int sites : {2, 4}) {
    for (DriveKind kind : kDrives) {
      for (double tau : {0.5, 5.0, 10.0}) {
        const DriveProtocol d = build_drive(kind, sites, tau);
        for (double t : {0.2, 2.5, 20.0}) {
          const auto ref = oracle::one_body_oracle(d, 1.0 / t, steps);
          ApproxOptions o;
          o.steps = steps;
          for (Method m : {Method::Exact, Method::NonInteracting, Method::ExactPlusNI}) {
            const auto r = approx_work(ApproximationScheme::from_method(m),
                                       ChainSpec::half_filled(sites, 0.0), d, 1.0 / t, o);
            worst = std::max({worst, std::abs(r.work - ref.work), std::abs(r.delta_f - ref.delta_f)});
            ++cases;
          }
        }
      }
    }
  }
  return {worst < kOracle, std::to_string(cases) + " U=0 cells, max |diff| " + fmt(worst) + " J"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  Presets presets;
  try {
    presets = load_presets();
  } catch (const std::exception& e) {
    std::cout << "FAIL preset-sweeps: " << e.what() << "\n";
    return 1;
  }
  const Presets& p = presets;
  const std::vector<Criterion> criteria = {
      {"ni-u-independence", [&] { return ni_u_independence(p); }},
      {"trace-work-equals-tpm-moment", [] { return trace_vs_tpm(); }},
      {"jarzynski-equality", [] { return jarzynski(); }},
      {"second-law", [&] { return second_law(p); }},
      {"sudden-quench-limit", [] { return sudden_quench(); }},
      {"adiabatic-limit", [] { return adiabatic(); }},
      {"mi-work-sign", [&] { return mi_sign(p); }},
      {"drive-ordering", [&] { return drive_ordering(p); }},
      {"range-contraction", [&] { return range_contraction(p); }},
      {"free-energy-tau-independence", [&] { return df_tau_independence(p); }},
      {"exact-ni-accuracy-band", [&] { return accuracy_band(p); }},
      {"exact-ni-entropy-clamp", [&] { return entropy_clamp(p); }},
      {"performance", [&] { return performance(p); }},
      {"one-body-oracle", [] { return one_body_oracle(); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed ? 1 : 0;
}
