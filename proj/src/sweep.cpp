#include "qwork/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "qwork/errors.hpp"
#include "qwork/spectra.hpp"

#ifndef QWORK_VERSION
#define QWORK_VERSION "dev"
#endif

namespace qwork {

namespace {

using json = nlohmann::json;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view text, std::size_t line, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("bad number '" + std::string(text) + "' for " + std::string(what), line);
  }
  return v;
}

long to_integer(std::string_view text, std::size_t line, std::string_view what) {
  text = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("bad integer '" + std::string(text) + "' for " + std::string(what), line);
  }
  return v;
}

std::vector<double> number_list(std::string_view text, std::size_t line, std::string_view key) {
  std::vector<double> out;
  for (auto item : split(text, ',')) out.push_back(to_double(item, line, key));
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Dynamic scheduling over independent items; the first exception stops the
// remaining work and is rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(count, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Re-raises the current exception with the cell key prepended, keeping its type.
[[noreturn]] void rethrow_with_key(const std::string& key) {
  try {
    throw;
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(key + ": " + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(key + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(key + ": " + e.what());
  }
}

std::string cell_key(DriveKind drive, std::optional<double> u, double tau, std::string_view what) {
  std::string k = "cell drive=" + std::string(drive_name(drive));
  if (u) k += " U=" + format_double(*u);
  k += " tau=" + format_double(tau) + " (" + std::string(what) + ")";
  return k;
}

template <class T>
bool has_duplicates(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

constexpr const char* kColumns[] = {"drive", "T",  "U",     "tau",          "method",
                                    "W_avg", "W_ext", "dF", "dS", "steps", "clamped_flag",
                                    "error_floor_flag"};

}  // namespace

std::vector<double> linspace(double a, double b, int count) {
  if (count < 1) throw DomainError("linspace needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = count == 1 ? a : a + (b - a) * k / (count - 1);
  }
  return out;
}

SweepConfig SweepConfig::standard_preset(int sites) {
  SweepConfig c;
  c.sites = sites;
  c.drives = {DriveKind::Comb, DriveKind::MiddleIsland, DriveKind::AppliedElectricField};
  c.temperatures = {0.2, 2.5, 20.0};
  c.interactions = linspace(0.0, 10.0, 21);
  c.taus = linspace(0.5, 10.0, 20);
  c.steps = 2000;
  c.methods = {Method::Exact, Method::NonInteracting, Method::ExactPlusNI};
  c.output = "preset_L" + std::to_string(sites) + ".csv";
  return c;
}

void SweepConfig::validate() const {
  ChainSpec::half_filled(sites, 0.0).validate();
  if (drives.empty()) throw DomainError("no drives requested");
  for (DriveKind d : drives) {
    if (d == DriveKind::Custom) throw DomainError("sweeps run preset drives only");
    build_drive(d, sites);
  }
  if (temperatures.empty() || interactions.empty() || taus.empty() || methods.empty()) {
    throw DomainError("temperatures, U values, tau values and methods must be non-empty");
  }
  for (double t : temperatures) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("temperatures must be positive and finite");
  }
  for (double u : interactions) {
    if (!std::isfinite(u)) throw DomainError("U values must be finite");
  }
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("tau values must be positive and finite");
  }
  if (has_duplicates(drives) || has_duplicates(temperatures) || has_duplicates(interactions) ||
      has_duplicates(taus) || has_duplicates(methods)) {
    throw DomainError("grid axes must not repeat values");
  }
  if (steps < 1) throw DomainError("steps must be at least 1");
  if (tolerance && !(*tolerance > 0.0)) throw DomainError("tol must be positive");
  if (threads < 0) throw DomainError("threads must be non-negative");
}

std::string SweepConfig::canonical() const {
  std::string out = "L = " + std::to_string(sites) + "\ndrives = ";
  for (std::size_t i = 0; i < drives.size(); ++i) {
    out += (i ? ", " : "") + std::string(drive_name(drives[i]));
  }
  out += "\ntemperatures = " + join_numbers(temperatures);
  out += "\nU_values = " + join_numbers(interactions);
  out += "\ntau_values = " + join_numbers(taus);
  out += tolerance ? "\nsteps = auto(" + format_double(*tolerance) + ")"
                   : "\nsteps = " + std::to_string(steps);
  out += "\nmethods = ";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    out += (i ? ", " : "") + std::string(method_name(methods[i]));
  }
  return out + "\n";
}

std::size_t SweepConfig::cell_count() const {
  return drives.size() * temperatures.size() * interactions.size() * taus.size() * methods.size();
}

SweepConfig parse_sweep_config(std::string_view text) {
  std::map<std::string, std::pair<std::string, std::size_t>> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("empty key", line_no);
    if (!entries.emplace(key, std::make_pair(value, line_no)).second) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }
  }

  static const std::set<std::string> known = {"L",         "drives",    "temperatures", "U_values",
                                              "U_range",   "U_count",   "tau_values",   "tau_range",
                                              "tau_count", "steps",     "tol",          "methods",
                                              "output",    "threads"};
  for (const auto& [key, entry] : entries) {
    if (!known.count(key)) throw ParseError("unknown key '" + key + "'", entry.second);
  }
  auto get = [&](const char* key) -> const std::pair<std::string, std::size_t>* {
    const auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
  };

  int sites = 6;
  if (auto e = get("L")) sites = static_cast<int>(to_integer(e->first, e->second, "L"));
  SweepConfig c = SweepConfig::standard_preset(sites);
  c.output = "sweep.csv";

  if (auto e = get("drives")) {
    c.drives.clear();
    for (auto name : split(e->first, ',')) {
      const auto kind = parse_drive_kind(name);
      if (!kind || *kind == DriveKind::Custom) {
        throw ParseError("unknown drive '" + std::string(name) + "'", e->second);
      }
      c.drives.push_back(*kind);
    }
  }
  if (auto e = get("temperatures")) c.temperatures = number_list(e->first, e->second, "temperatures");

  auto axis = [&](const char* values_key, const char* range_key, const char* count_key,
                  std::vector<double>& target) {
    const auto* values = get(values_key);
    const auto* range = get(range_key);
    const auto* count = get(count_key);
    if (values && (range || count)) {
      throw ParseError(std::string(values_key) + " conflicts with " + range_key + "/" + count_key,
                       values->second);
    }
    if (values) {
      target = number_list(values->first, values->second, values_key);
    } else if (range || count) {
      if (!range || !count) {
        throw ParseError(std::string(range_key) + " and " + count_key + " go together",
                         (range ? range : count)->second);
      }
      const auto ends = number_list(range->first, range->second, range_key);
      if (ends.size() != 2) throw ParseError(std::string(range_key) + " needs two values", range->second);
      const long n = to_integer(count->first, count->second, count_key);
      if (n < 1) throw ParseError(std::string(count_key) + " must be positive", count->second);
      target = linspace(ends[0], ends[1], static_cast<int>(n));
    }
  };
  axis("U_values", "U_range", "U_count", c.interactions);
  axis("tau_values", "tau_range", "tau_count", c.taus);

  const auto* steps = get("steps");
  const auto* tol = get("tol");
  if (steps && tol) throw ParseError("steps and tol are mutually exclusive", tol->second);
  if (steps) {
    std::string_view v = steps->first;
    if (v.starts_with("auto(") && v.ends_with(")")) {
      c.tolerance = to_double(v.substr(5, v.size() - 6), steps->second, "steps");
    } else {
      c.steps = static_cast<int>(to_integer(v, steps->second, "steps"));
    }
  }
  if (tol) c.tolerance = to_double(tol->first, tol->second, "tol");

  if (auto e = get("methods")) {
    c.methods.clear();
    for (auto name : split(e->first, ',')) {
      const auto m = parse_method(name);
      if (!m) throw ParseError("unknown method '" + std::string(name) + "'", e->second);
      c.methods.push_back(*m);
    }
  }
  if (auto e = get("output")) c.output = e->first;
  if (auto e = get("threads")) c.threads = static_cast<int>(to_integer(e->first, e->second, "threads"));

  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid configuration: ") + e.what());
  }
  return c;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str());
}

bool record_key_less(const WorkEntropyRecord& a, const WorkEntropyRecord& b) {
  const auto da = drive_name(a.drive);
  const auto db = drive_name(b.drive);
  if (da != db) return da < db;
  if (a.temperature != b.temperature) return a.temperature < b.temperature;
  if (a.interaction != b.interaction) return a.interaction < b.interaction;
  if (a.tau != b.tau) return a.tau < b.tau;
  return method_name(a.method) < method_name(b.method);
}

SweepResult run_sweep(const SweepConfig& config, const SweepOptions& options) {
  config.validate();
  const auto clock_start = std::chrono::steady_clock::now();
  SweepResult result;
  result.provenance.started = utc_now();
  int threads = options.threads > 0 ? options.threads : config.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const ChainSpec base_spec = ChainSpec::half_filled(config.sites, 0.0);
  const SectorBasis basis = build_sector_basis(base_spec);
  const auto has = [&](Method m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };
  const bool want_exact = has(Method::Exact);
  const bool want_ni = has(Method::NonInteracting);
  const bool want_mixed = has(Method::ExactPlusNI);
  const bool need_exact_endpoints = want_exact || want_mixed;
  const bool need_ni_dynamics = want_ni || want_mixed;

  const std::size_t nd = config.drives.size();
  const std::size_t nt = config.temperatures.size();
  const std::size_t nu = config.interactions.size();
  const std::size_t ntau = config.taus.size();
  std::vector<double> betas(nt);
  for (std::size_t t = 0; t < nt; ++t) betas[t] = 1.0 / config.temperatures[t];

  auto spec_for = [&](double u) {
    ChainSpec s = base_spec;
    s.interaction = u;
    return s;
  };
  auto drive_for = [&](std::size_t d, double tau) {
    return build_drive(config.drives[d], config.sites, tau);
  };
  auto evolve = [&](const ChainSpec& s, const DriveProtocol& drive) {
    if (config.tolerance) {
      return converged_propagate(s, basis, drive, betas, *config.tolerance, options.convergence)
          .propagator;
    }
    return propagate(s, basis, drive, config.steps, options.propagate);
  };

  // Endpoint spectra, shared read-only by every later task. The final
  // Hamiltonian does not depend on tau, so tau = 1 stands in for all of them.
  std::vector<std::optional<Endpoints>> ni_ends(nd);
  std::vector<std::optional<Endpoints>> exact_ends(nd * nu);
  {
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> jobs;
    for (std::size_t d = 0; d < nd; ++d) {
      if (need_ni_dynamics) jobs.push_back({d, std::nullopt});
      if (need_exact_endpoints) {
        for (std::size_t u = 0; u < nu; ++u) jobs.push_back({d, u});
      }
    }
    parallel_for(jobs.size(), threads, [&](std::size_t i) {
      const auto [d, u] = jobs[i];
      try {
        if (u) {
          exact_ends[d * nu + *u] = build_endpoints(spec_for(config.interactions[*u]), basis,
                                                    drive_for(d, 1.0), Model::Exact);
        } else {
          ni_ends[d] = build_endpoints(base_spec, basis, drive_for(d, 1.0), Model::NonInteracting);
        }
      } catch (...) {
        rethrow_with_key(cell_key(config.drives[d], u ? std::optional(config.interactions[*u]) : std::nullopt,
                                  1.0, "spectra"));
      }
    });
  }

  // Populations and free energies: once per (drive, U, T) and (drive, T).
  std::vector<Eigen::VectorXd> exact_pops(nd * nu * nt), ni_pops(nd * nt);
  std::vector<double> exact_df(nd * nu * nt, 0.0), ni_df(nd * nt, 0.0);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t t = 0; t < nt; ++t) {
      if (ni_ends[d]) {
        ni_pops[d * nt + t] = boltzmann_populations(ni_ends[d]->s0.energies, betas[t]);
        ni_df[d * nt + t] = free_energy_delta(ni_ends[d]->s0, ni_ends[d]->sf, betas[t]).value;
      }
      for (std::size_t u = 0; u < nu && need_exact_endpoints; ++u) {
        const Endpoints& e = *exact_ends[d * nu + u];
        const std::size_t k = (d * nu + u) * nt + t;
        exact_pops[k] = boltzmann_populations(e.s0.energies, betas[t]);
        exact_df[k] = free_energy_delta(e.s0, e.sf, betas[t]).value;
      }
    }
  }

  const std::size_t ni_tasks = need_ni_dynamics ? nd * ntau : 0;
  const std::size_t cell_tasks = need_exact_endpoints ? nd * nu * ntau : 0;
  const std::size_t total_tasks = ni_tasks + cell_tasks;
  std::atomic<std::size_t> done{0};
  auto tick = [&] {
    const std::size_t n = ++done;
    if (options.progress) options.progress(n, total_tasks);
  };
  const std::size_t repeats = options.cache_propagators ? 1 : nt;

  // Per-level work pieces, one per temperature (copies when cached).
  struct Cell {
    std::vector<WorkProfile> profiles;
    int steps = 0;
  };
  std::vector<Cell> ni_cells(nd * ntau);
  std::vector<Propagator> ni_props(want_mixed ? nd * ntau : 0);

  const ApproximationScheme exact_scheme = ApproximationScheme::from_method(Method::Exact);
  const ApproximationScheme ni_scheme = ApproximationScheme::from_method(Method::NonInteracting);
  const ApproximationScheme mixed_scheme = ApproximationScheme::from_method(Method::ExactPlusNI);

  parallel_for(ni_tasks, threads, [&](std::size_t i) {
    const std::size_t d = i / ntau;
    const std::size_t tau = i % ntau;
    try {
      const DriveProtocol drive = drive_for(d, config.taus[tau]);
      Cell& cell = ni_cells[i];
      for (std::size_t r = 0; r < repeats; ++r) {
        Propagator p = evolve(base_spec, drive);
        cell.steps = p.steps;
        if (want_ni) cell.profiles.push_back(work_profile(ni_scheme, *ni_ends[d], *ni_ends[d], p));
        if (want_mixed && r + 1 == repeats) ni_props[i] = std::move(p);
      }
      if (want_ni) cell.profiles.resize(nt, cell.profiles.front());
    } catch (...) {
      rethrow_with_key(cell_key(config.drives[d], std::nullopt, config.taus[tau], "NI dynamics"));
    }
    tick();
  });

  std::vector<Cell> exact_cells(want_exact ? nd * nu * ntau : 0);
  std::vector<Cell> mixed_cells(want_mixed ? nd * nu * ntau : 0);
  parallel_for(cell_tasks, threads, [&](std::size_t i) {
    const std::size_t d = i / (nu * ntau);
    const std::size_t u = (i / ntau) % nu;
    const std::size_t tau = i % ntau;
    const double interaction = config.interactions[u];
    try {
      const DriveProtocol drive = drive_for(d, config.taus[tau]);
      const Endpoints& ends = *exact_ends[d * nu + u];
      if (want_exact) {
        Cell& cell = exact_cells[i];
        for (std::size_t r = 0; r < repeats; ++r) {
          const Propagator p = evolve(spec_for(interaction), drive);
          cell.steps = p.steps;
          cell.profiles.push_back(work_profile(exact_scheme, ends, ends, p));
        }
        cell.profiles.resize(nt, cell.profiles.front());
      }
      if (want_mixed) {
        Cell& cell = mixed_cells[i];
        const Propagator& cached = ni_props[d * ntau + tau];
        for (std::size_t r = 0; r < repeats; ++r) {
          if (options.cache_propagators) {
            cell.profiles.push_back(
                work_profile(mixed_scheme, ends, *ni_ends[d], cached, options.initial_term));
          } else {
            const Propagator p = evolve(base_spec, drive);
            cell.profiles.push_back(
                work_profile(mixed_scheme, ends, *ni_ends[d], p, options.initial_term));
          }
        }
        cell.steps = cached.steps;
        cell.profiles.resize(nt, cell.profiles.front());
      }
    } catch (...) {
      rethrow_with_key(cell_key(config.drives[d], interaction, config.taus[tau], "exact dynamics"));
    }
    tick();
  });

  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t t = 0; t < nt; ++t) {
      const double beta = betas[t];
      for (std::size_t u = 0; u < nu; ++u) {
        for (std::size_t tau = 0; tau < ntau; ++tau) {
          const std::size_t cell = (d * nu + u) * ntau + tau;
          const std::size_t k = (d * nu + u) * nt + t;
          WorkEntropyRecord base;
          base.beta = beta;
          base.drive = config.drives[d];
          base.temperature = config.temperatures[t];
          base.interaction = config.interactions[u];
          base.tau = config.taus[tau];

          std::optional<double> exact_extracted;
          auto emit = [&](Method m, double work, double df, int steps) {
            WorkEntropyRecord r = base;
            const EntropyEstimate ds = approx_entropy(ApproximationScheme::from_method(m), work, beta,
                                                      df, df);
            r.method = m;
            r.work = work;
            r.extracted_work = -work;
            r.delta_f = df;
            r.delta_s = ds.value;
            r.clamped = ds.clamped;
            r.steps = steps;
            if (m != Method::Exact && exact_extracted) {
              r.error_floor = relative_error(r.extracted_work, *exact_extracted).floored;
            }
            result.records.push_back(r);
          };
          if (want_exact) {
            const Cell& c = exact_cells[cell];
            const double w = c.profiles[t].work(exact_pops[k]);
            exact_extracted = -w;
            emit(Method::Exact, w, exact_df[k], c.steps);
          }
          if (want_ni) {
            const Cell& c = ni_cells[d * ntau + tau];
            emit(Method::NonInteracting, c.profiles[t].work(ni_pops[d * nt + t]), ni_df[d * nt + t],
                 c.steps);
          }
          if (want_mixed) {
            const Cell& c = mixed_cells[cell];
            emit(Method::ExactPlusNI, c.profiles[t].work(exact_pops[k]), exact_df[k], c.steps);
          }
        }
      }
    }
  }
  std::stable_sort(result.records.begin(), result.records.end(), record_key_less);

  Provenance& p = result.provenance;
  p.config_text = config.canonical();
  p.config_hash = fnv1a_hex(p.config_text);
  p.code_version = QWORK_VERSION;
  p.finished = utc_now();
  p.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
  p.threads = threads;
  return result;
}

std::string_view csv_header() {
  return "drive,T,U,tau,method,W_avg,W_ext,dF,dS,steps,clamped_flag,error_floor_flag";
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  return p.replace_extension(".json");
}

void persist(const SweepResult& result, const std::filesystem::path& csv) {
  std::string text(csv_header());
  text += '\n';
  for (const auto& r : result.records) {
    text += std::string(drive_name(r.drive)) + ',' + format_double(r.temperature) + ',' +
            format_double(r.interaction) + ',' + format_double(r.tau) + ',' +
            std::string(method_name(r.method)) + ',' + format_double(r.work) + ',' +
            format_double(r.extracted_work) + ',' + format_double(r.delta_f) + ',' +
            format_double(r.delta_s) + ',' + std::to_string(r.steps) + ',' +
            (r.clamped ? "1" : "0") + ',' + (r.error_floor ? "1" : "0") + '\n';
  }

  const Provenance& p = result.provenance;
  json side;
  side["code_version"] = p.code_version;
  side["config_hash"] = p.config_hash;
  side["config"] = p.config_text;
  side["started"] = p.started;
  side["finished"] = p.finished;
  side["wall_seconds"] = p.wall_seconds;
  side["threads"] = p.threads;
  side["relative_error_floor"] = kRelativeErrorFloor;
  json steps = json::array();
  for (const auto& r : result.records) {
    // One entry per propagator-bearing cell; temperatures share it.
    if (r.temperature != result.records.front().temperature) continue;
    steps.push_back({{"drive", drive_name(r.drive)},
                     {"U", r.interaction},
                     {"tau", r.tau},
                     {"method", method_name(r.method)},
                     {"steps", r.steps}});
  }
  side["cell_steps"] = std::move(steps);

  auto write = [](const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
  };
  write(csv, text);
  write(sidecar_path(csv), side.dump(2) + "\n");
}

SweepResult parse_csv(std::string_view text) {
  SweepResult result;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::vector<int> index;  // column position of each expected field
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? end : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      const auto names = split(line, ',');
      for (const char* col : kColumns) {
        const auto it = std::find(names.begin(), names.end(), col);
        if (it == names.end()) throw ParseError(std::string("missing column '") + col + "'", 1);
        index.push_back(static_cast<int>(it - names.begin()));
      }
      continue;
    }
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    const auto field = [&](int k) -> std::string_view {
      const auto at = static_cast<std::size_t>(index[static_cast<std::size_t>(k)]);
      if (at >= fields.size()) {
        throw ParseError(std::string("record has no '") + kColumns[k] + "' field", line_no);
      }
      return fields[at];
    };
    WorkEntropyRecord r;
    const auto drive = parse_drive_kind(field(0));
    if (!drive) throw ParseError("unknown drive '" + std::string(field(0)) + "'", line_no);
    r.drive = *drive;
    r.temperature = to_double(field(1), line_no, "T");
    r.beta = 1.0 / r.temperature;
    r.interaction = to_double(field(2), line_no, "U");
    r.tau = to_double(field(3), line_no, "tau");
    const auto method = parse_method(field(4));
    if (!method) throw ParseError("unknown method '" + std::string(field(4)) + "'", line_no);
    r.method = *method;
    r.work = to_double(field(5), line_no, "W_avg");
    r.extracted_work = to_double(field(6), line_no, "W_ext");
    r.delta_f = to_double(field(7), line_no, "dF");
    r.delta_s = to_double(field(8), line_no, "dS");
    r.steps = static_cast<int>(to_integer(field(9), line_no, "steps"));
    r.clamped = to_integer(field(10), line_no, "clamped_flag") != 0;
    r.error_floor = to_integer(field(11), line_no, "error_floor_flag") != 0;
    result.records.push_back(r);
  }
  if (line_no == 0) throw ParseError("empty file: header missing", 1);
  return result;
}

SweepResult load(const std::filesystem::path& csv) {
  auto read = [](const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  SweepResult result = parse_csv(read(csv));
  const auto side = sidecar_path(csv);
  if (std::filesystem::exists(side)) {
    json j;
    try {
      j = json::parse(read(side));
      Provenance& p = result.provenance;
      p.code_version = j.at("code_version").get<std::string>();
      p.config_hash = j.at("config_hash").get<std::string>();
      p.config_text = j.at("config").get<std::string>();
      p.started = j.at("started").get<std::string>();
      p.finished = j.at("finished").get<std::string>();
      p.wall_seconds = j.at("wall_seconds").get<double>();
      p.threads = j.at("threads").get<int>();
    } catch (const json::exception& e) {
      throw ParseError(side.string() + ": " + e.what());
    }
  }
  return result;
}

SummaryRow summarize_group(const std::vector<const WorkEntropyRecord*>& group) {
  if (group.empty()) throw DomainError("cannot summarise an empty group");
  SummaryRow row;
  const WorkEntropyRecord& first = *group.front();
  row.drive = first.drive;
  row.temperature = first.temperature;
  row.method = first.method;
  const bool all_u = first.method == Method::NonInteracting;
  auto at = [&](const WorkEntropyRecord& r, double v) {
    return Extremum{v, all_u ? std::nullopt : std::optional(r.interaction), r.tau};
  };
  row.work_min = row.work_max = at(first, first.extracted_work);
  row.entropy_min = row.entropy_max = at(first, first.delta_s);
  for (const WorkEntropyRecord* r : group) {
    if (r->extracted_work < row.work_min.value) row.work_min = at(*r, r->extracted_work);
    if (r->extracted_work > row.work_max.value) row.work_max = at(*r, r->extracted_work);
    if (r->delta_s < row.entropy_min.value) row.entropy_min = at(*r, r->delta_s);
    if (r->delta_s > row.entropy_max.value) row.entropy_max = at(*r, r->delta_s);
  }
  return row;
}

std::vector<SummaryRow> summarize(const SweepResult& result) {
  std::vector<const WorkEntropyRecord*> sorted;
  for (const auto& r : result.records) sorted.push_back(&r);
  auto group_less = [](const WorkEntropyRecord* a, const WorkEntropyRecord* b) {
    const auto da = drive_name(a->drive);
    const auto db = drive_name(b->drive);
    if (da != db) return da < db;
    if (a->temperature != b->temperature) return a->temperature < b->temperature;
    return method_name(a->method) < method_name(b->method);
  };
  std::stable_sort(sorted.begin(), sorted.end(), group_less);
  std::vector<SummaryRow> rows;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    std::vector<const WorkEntropyRecord*> group;
    while (j < sorted.size() && !group_less(sorted[i], sorted[j]) && !group_less(sorted[j], sorted[i])) {
      group.push_back(sorted[j++]);
    }
    rows.push_back(summarize_group(group));
    i = j;
  }
  return rows;
}

Grid extract_grid(const SweepResult& result, DriveKind drive, double temperature, Method method,
                  Quantity quantity) {
  std::vector<const WorkEntropyRecord*> slice;
  std::set<double> us, taus;
  for (const auto& r : result.records) {
    if (r.drive == drive && r.temperature == temperature && r.method == method) {
      slice.push_back(&r);
      us.insert(r.interaction);
      taus.insert(r.tau);
    }
  }
  Grid g;
  g.interactions.assign(us.begin(), us.end());
  g.taus.assign(taus.begin(), taus.end());
  const auto rows = static_cast<Eigen::Index>(g.interactions.size());
  const auto cols = static_cast<Eigen::Index>(g.taus.size());
  if (slice.empty() || static_cast<Eigen::Index>(slice.size()) != rows * cols) {
    throw DomainError("slice " + std::string(drive_name(drive)) + " T=" + format_double(temperature) +
                      " " + std::string(method_name(method)) + " is not a complete grid");
  }
  g.values = Eigen::MatrixXd::Constant(rows, cols, std::numeric_limits<double>::quiet_NaN());
  for (const WorkEntropyRecord* r : slice) {
    const auto i = std::lower_bound(g.interactions.begin(), g.interactions.end(), r->interaction) -
                   g.interactions.begin();
    const auto j = std::lower_bound(g.taus.begin(), g.taus.end(), r->tau) - g.taus.begin();
    const double v = quantity == Quantity::ExtractedWork ? r->extracted_work
                     : quantity == Quantity::Entropy     ? r->delta_s
                                                         : r->delta_f;
    g.values(i, j) = v;
  }
  if (g.values.hasNaN()) throw DomainError("slice has repeated cells");
  return g;
}

}  // namespace qwork
