// qwork: point evaluations, sweeps, limit formulas and the validation suite.
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qwork/approximations.hpp"
#include "qwork/errors.hpp"
#include "qwork/spectra.hpp"
#include "qwork/sweep.hpp"
#include "qwork/thermo.hpp"
#include "qwork/validate.hpp"

namespace {

using namespace qwork;

enum Exit { kOk = 0, kValidation = 1, kUsage = 2, kNumerical = 3, kIo = 4 };

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[40];
  if (v == 0.0) v = 0.0;  // no "-0"
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw DomainError(std::string(flag) + ": bad number '" + item + "'");
    }
  }
  return out;
}

// Flags shared by point and limits.
struct CellFlags {
  int sites = 0;
  std::string drive;
  std::string mu0, mutau;
  std::optional<double> temperature, beta;
  double interaction = 0.0;
  double tau = 1.0;
  std::string methods = "exact";
  std::optional<int> steps;
  std::optional<double> tol;

  void add_to(CLI::App* app, bool with_dynamics) {
    app->add_option("--L", sites, "Number of sites (even, half filling)")->required();
    app->add_option("--drive", drive, "comb | mi | aef | custom")->required();
    app->add_option("--mu0", mu0, "Custom drive: comma-separated mu0_i in J");
    app->add_option("--mutau", mutau, "Custom drive: comma-separated mutau_i in J");
    auto* t = app->add_option("--T", temperature, "Temperature in J/k_B");
    auto* b = app->add_option("--beta", beta, "Inverse temperature in 1/J");
    t->excludes(b);
    app->add_option("--U", interaction, "On-site interaction in J");
    if (with_dynamics) {
      app->add_option("--tau", tau, "Drive duration in 1/J")->required();
      app->add_option("--method", methods, "exact | ni | exact-ni, comma-separated");
      auto* s = app->add_option("--steps", steps, "Fixed number of time steps (default 2000)");
      auto* o = app->add_option("--tol", tol, "Step-doubling tolerance instead of fixed steps");
      s->excludes(o);
    }
  }

  double inverse_temperature() const {
    if (temperature) {
      if (!(*temperature > 0.0) || !std::isfinite(*temperature)) {
        throw DomainError("--T must be positive and finite");
      }
      return 1.0 / *temperature;
    }
    if (beta) {
      if (!(*beta > 0.0) || !std::isfinite(*beta)) throw DomainError("--beta must be positive and finite");
      return *beta;
    }
    throw DomainError("one of --T or --beta is required");
  }

  DriveProtocol drive_protocol() const {
    const auto kind = parse_drive_kind(drive);
    if (!kind) throw DomainError("unknown drive '" + drive + "'");
    if (*kind == DriveKind::Custom) {
      if (mu0.empty() || mutau.empty()) throw DomainError("custom drive needs --mu0 and --mutau");
      DriveProtocol d = custom_drive(parse_list(mu0, "--mu0"), parse_list(mutau, "--mutau"), tau);
      if (d.sites() != sites) throw DomainError("--mu0/--mutau length must equal --L");
      return d;
    }
    if (!mu0.empty() || !mutau.empty()) throw DomainError("--mu0/--mutau apply to custom drives only");
    return build_drive(*kind, sites, tau);
  }

  std::vector<Method> method_list() const {
    std::vector<Method> out;
    std::stringstream ss(methods);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto m = parse_method(item);
      if (!m) throw DomainError("unknown method '" + item + "'");
      out.push_back(*m);
    }
    if (out.empty()) throw DomainError("--method is empty");
    return out;
  }
};

void print_record(const WorkEntropyRecord& r, int sites) {
  std::cout << "drive=" << drive_name(r.drive) << " L=" << sites << " T[J]=" << num(r.temperature)
            << " beta[1/J]=" << num(r.beta) << " U[J]=" << num(r.interaction)
            << " tau[1/J]=" << num(r.tau) << " method=" << method_name(r.method)
            << " steps=" << r.steps << " W_avg[J]=" << num(r.work)
            << " W_ext[J]=" << num(r.extracted_work) << " dF[J]=" << num(r.delta_f)
            << " dS[1]=" << num(r.delta_s) << " clamped=" << (r.clamped ? 1 : 0) << "\n";
}

int cmd_point(const CellFlags& f) {
  const DriveProtocol drive = f.drive_protocol();
  const double beta = f.inverse_temperature();
  const ChainSpec spec = ChainSpec::half_filled(f.sites, f.interaction);
  ApproxOptions options;
  if (f.steps) options.steps = *f.steps;
  if (f.tol) options.tolerance = *f.tol;
  if (options.steps < 1) throw DomainError("--steps must be at least 1");
  for (Method m : f.method_list()) {
    WorkEntropyRecord r = approx_work(ApproximationScheme::from_method(m), spec, drive, beta, options);
    print_record(r, f.sites);
  }
  return kOk;
}

int cmd_limits(const CellFlags& f) {
  const DriveProtocol drive = f.drive_protocol();
  const double beta = f.inverse_temperature();
  const ChainSpec spec = ChainSpec::half_filled(f.sites, f.interaction);
  const SectorBasis basis = build_sector_basis(spec);
  const Endpoints exact = build_endpoints(spec, basis, drive, Model::Exact);
  const Endpoints ni = build_endpoints(spec, basis, drive, Model::NonInteracting);
  const ThermalState rho0 = thermal_state(exact.s0, beta);

  const double adiabatic = -adiabatic_work(exact.s0, rho0.populations, exact.sf);
  const double sudden = sudden_quench_work(rho0, exact.h0, exact.hf);
  const double mixed_adiabatic = exact_ni_adiabatic_work(exact.s0, rho0.populations, ni.s0, ni.sf);
  const double mixed_sudden = sudden_quench_work(exact.s0, rho0.populations, ni.h0, ni.hf);

  std::cout << "drive=" << drive_name(drive.kind) << " L=" << f.sites << " beta[1/J]=" << num(beta)
            << " U[J]=" << num(f.interaction) << "\n";
  std::cout << "method=exact W_avg_adiabatic[J]=" << num(adiabatic)
            << " W_ext_adiabatic[J]=" << num(-adiabatic) << " W_avg_sudden[J]=" << num(sudden)
            << " W_ext_sudden[J]=" << num(-sudden) << "\n";
  std::cout << "method=exact-ni W_avg_adiabatic[J]=" << num(mixed_adiabatic)
            << " W_ext_adiabatic[J]=" << num(-mixed_adiabatic)
            << " W_avg_sudden[J]=" << num(mixed_sudden) << " W_ext_sudden[J]=" << num(-mixed_sudden)
            << "\n";
  return kOk;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  auto where = [](const Extremum& e) {
    return std::string(" U[J]=") + (e.interaction ? num(*e.interaction) : std::string("all")) +
           " tau[1/J]=" + num(e.tau);
  };
  for (const SummaryRow& r : rows) {
    std::cout << "summary drive=" << drive_name(r.drive) << " T[J]=" << num(r.temperature)
              << " method=" << method_name(r.method) << " W_ext_min[J]=" << num(r.work_min.value)
              << where(r.work_min) << " W_ext_max[J]=" << num(r.work_max.value) << where(r.work_max)
              << " dS_min[1]=" << num(r.entropy_min.value) << where(r.entropy_min)
              << " dS_max[1]=" << num(r.entropy_max.value) << where(r.entropy_max) << "\n";
  }
}

struct SweepFlags {
  std::string config;
  std::optional<int> sites;
  std::string output;
  int threads = 0;
  bool quiet = false;
};

int cmd_sweep(const SweepFlags& f) {
  SweepConfig config;
  if (!f.config.empty()) {
    try {
      config = load_sweep_config(f.config);
    } catch (const ParseError& e) {
      std::cerr << "error: " << f.config << ": " << e.what() << "\n";
      return kUsage;
    }
    if (f.sites) throw DomainError("--L cannot be combined with --config");
  } else if (f.sites) {
    config = SweepConfig::standard_preset(*f.sites);
  } else {
    throw DomainError("sweep needs --config or --L (standard preset)");
  }
  if (!f.output.empty()) config.output = f.output;
  if (f.threads < 0) throw DomainError("--threads must be non-negative");
  config.validate();
  const auto dir = std::filesystem::absolute(config.output).parent_path();
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("output directory " + dir.string() + " does not exist");
  }

  SweepOptions options;
  options.threads = f.threads;
  if (!f.quiet) {
    options.progress = [](std::size_t done, std::size_t total) {
      std::fprintf(stderr, "\rprogress %zu/%zu", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  }
  const SweepResult result = run_sweep(config, options);
  persist(result, config.output);
  std::cout << "wrote " << config.output << " (" << result.records.size() << " records) and "
            << sidecar_path(config.output).string() << "\n";
  std::cout << "wall_seconds[s]=" << num(result.provenance.wall_seconds)
            << " threads=" << result.provenance.threads << "\n";
  print_summary(summarize(result));
  return kOk;
}

int cmd_summarize(const std::string& path) {
  SweepResult result;
  try {
    result = load(path);
  } catch (const ParseError& e) {
    std::cerr << "error: " << path << ": " << e.what() << "\n";
    return kIo;
  }
  print_summary(summarize(result));
  return kOk;
}

int cmd_validate(bool quick, bool fault) {
  ValidationOptions options;
  options.quick = quick;
  options.inject_fault = fault;
  const ValidationReport report = run_validation(options);
  for (const CheckResult& c : report.checks) {
    std::cout << "check " << c.name << ' ' << (c.pass ? "PASS" : "FAIL") << " worst=" << num(c.worst)
              << " tolerance=" << num(c.tolerance) << " cases=" << c.cases << "\n";
  }
  if (!report.passed()) {
    for (const CheckResult& c : report.checks) {
      if (!c.pass) std::cerr << "validation failed: " << c.name << "\n";
    }
    return kValidation;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Work extraction and entropy production in driven Hubbard chains"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", QWORK_VERSION);

  CellFlags point_flags;
  auto* point = app.add_subcommand("point", "Evaluate one (drive, T, U, tau) cell");
  point_flags.add_to(point, true);

  CellFlags limit_flags;
  auto* limits = app.add_subcommand("limits", "Adiabatic and sudden-quench reference values");
  limit_flags.add_to(limits, false);

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Run a (drive, T, U, tau) grid and write CSV + JSON");
  auto* cfg = sweep->add_option("--config", sweep_flags.config, "Key = value sweep configuration");
  auto* preset = sweep->add_option("--L", sweep_flags.sites, "Run the standard preset for L sites");
  cfg->excludes(preset);
  sweep->add_option("--output", sweep_flags.output, "CSV path (sidecar gets .json)");
  sweep->add_option("--threads", sweep_flags.threads, "Worker threads (0: all hardware threads)");
  sweep->add_flag("--quiet", sweep_flags.quiet, "No progress counter");

  bool quick = false;
  bool fault = false;
  auto* validate = app.add_subcommand("validate", "Run the invariant suite");
  validate->add_flag("--quick", quick, "2- and 4-site grid only");
  validate->add_flag("--inject-fault", fault, "Halve one propagator step (must fail)");

  std::string summary_path;
  auto* summarize_cmd = app.add_subcommand("summarize", "Extrema of a sweep CSV");
  summarize_cmd->add_option("csv", summary_path, "Sweep CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*point) return cmd_point(point_flags);
    if (*limits) return cmd_limits(limit_flags);
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*validate) return cmd_validate(quick, fault);
    if (*summarize_cmd) return cmd_summarize(summary_path);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) std::cerr << sub->help();
    return kUsage;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
