#include "qwork/approximations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qwork/errors.hpp"

namespace qwork {

ApproximationScheme ApproximationScheme::from_method(Method method) {
  switch (method) {
    case Method::Exact: return {Model::Exact, Model::Exact};
    case Method::NonInteracting: return {Model::NonInteracting, Model::NonInteracting};
    case Method::ExactPlusNI: return {Model::Exact, Model::NonInteracting};
  }
  throw DomainError("unknown method");
}

Method ApproximationScheme::method() const {
  if (!supported()) throw DomainError("NI initial state with exact evolution is not a supported scheme");
  if (is == Model::Exact) return evo == Model::Exact ? Method::Exact : Method::ExactPlusNI;
  return Method::NonInteracting;
}

ChainSpec model_spec(const ChainSpec& spec, Model model) {
  ChainSpec out = spec;
  if (model == Model::NonInteracting) out.interaction = 0.0;
  return out;
}

Endpoints build_endpoints(const ChainSpec& spec, const SectorBasis& basis,
                          const DriveProtocol& drive, Model model) {
  const ChainSpec s = model_spec(spec, model);
  HamiltonianMatrix h0 = assemble_hamiltonian(basis, s, initial_potential(drive));
  HamiltonianMatrix hf = assemble_hamiltonian(basis, s, final_potential(drive));
  Spectrum s0 = diagonalize(h0);
  Spectrum sf = diagonalize(hf);
  return Endpoints{model, std::move(h0), std::move(hf), std::move(s0), std::move(sf)};
}

double WorkProfile::work(const Eigen::VectorXd& populations) const {
  if (populations.size() != final.size()) throw DomainError("population vector has the wrong size");
  return populations.dot(final) - populations.dot(initial);
}

WorkProfile work_profile(const ApproximationScheme& scheme, const Endpoints& initial_state,
                         const Endpoints& evolution, const Propagator& prop, InitialTerm term) {
  scheme.method();
  if (initial_state.model != scheme.is || evolution.model != scheme.evo) {
    throw DomainError("endpoints do not match the approximation scheme");
  }
  const Spectrum& s0 = initial_state.s0;
  WorkProfile w;
  w.levels = s0.energies;
  w.final = evolved_energies(prop.matrix, s0.vectors, evolution.hf);
  if (scheme.is == scheme.evo) {
    w.initial = s0.energies;
  } else if (term == InitialTerm::Trace) {
    // <v_n| H0_evo |v_n> for the eigenvectors v_n of rho0
    const Eigen::MatrixXd hv = evolution.h0.dense() * s0.vectors;
    w.initial = s0.vectors.cwiseProduct(hv).colwise().sum().transpose();
  } else {
    w.initial = evolution.s0.energies;
  }
  return w;
}

EntropyEstimate approx_entropy(const ApproximationScheme& scheme, double work, double beta,
                               double delta_f_exact, double delta_f_ni) {
  switch (scheme.method()) {
    case Method::Exact: return {entropy_variation(work, delta_f_exact, beta), false};
    case Method::NonInteracting: return {entropy_variation(work, delta_f_ni, beta), false};
    case Method::ExactPlusNI: {
      const double raw = entropy_variation(work, delta_f_exact, beta);
      return raw < 0.0 ? EntropyEstimate{0.0, true} : EntropyEstimate{raw, false};
    }
  }
  return {};
}

double exact_ni_adiabatic_work(const Spectrum& initial_exact, const Eigen::VectorXd& populations,
                               const Spectrum& initial_ni, const Spectrum& final_ni,
                               InitialTerm term) {
  const auto n = static_cast<Eigen::Index>(initial_exact.dim());
  if (populations.size() != n || initial_ni.dim() != initial_exact.dim() ||
      final_ni.dim() != initial_exact.dim()) {
    throw DomainError("adiabatic exact+NI inputs disagree on the sector dimension");
  }
  // weights(m, n) = |<m_NI(0)|n_exact(0)>|^2
  const Eigen::MatrixXd weights = (initial_ni.vectors.transpose() * initial_exact.vectors).cwiseAbs2();
  const Eigen::VectorXd occupied = weights * populations;
  // Degenerate NI levels make the weights basis dependent; only the cluster
  // sums are not, so each cluster is sent to its mean final energy.
  Eigen::VectorXd paired = final_ni.energies;
  for (Eigen::Index a = 0; a < n;) {
    Eigen::Index b = a + 1;
    const double tol = 1e-9 * std::max(1.0, std::abs(initial_ni.energies[a]));
    while (b < n && initial_ni.energies[b] - initial_ni.energies[b - 1] <= tol) ++b;
    paired.segment(a, b - a).setConstant(final_ni.energies.segment(a, b - a).mean());
    a = b;
  }
  const double final_term = paired.dot(occupied);
  const double initial_term = term == InitialTerm::Trace ? initial_ni.energies.dot(occupied)
                                                         : initial_ni.energies.dot(populations);
  return final_term - initial_term;
}

WorkEntropyRecord approx_work(const ApproximationScheme& scheme, const ChainSpec& spec,
                              const DriveProtocol& drive, double beta,
                              const ApproxOptions& options) {
  const Method method = scheme.method();
  spec.validate();
  drive.validate();
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive and finite");
  const SectorBasis basis = build_sector_basis(spec);

  const Endpoints initial = build_endpoints(spec, basis, drive, scheme.is);
  const Endpoints evolution = scheme.evo == scheme.is
                                  ? initial
                                  : build_endpoints(spec, basis, drive, scheme.evo);
  const ChainSpec evo_spec = model_spec(spec, scheme.evo);

  Propagator prop;
  if (options.tolerance) {
    const double betas[] = {beta};
    prop = converged_propagate(evo_spec, basis, drive, betas, *options.tolerance,
                               options.convergence)
               .propagator;
  } else {
    prop = propagate(evo_spec, basis, drive, options.steps, options.propagate);
  }

  const WorkProfile profile = work_profile(scheme, initial, evolution, prop, options.initial_term);
  const double work = profile.work(boltzmann_populations(initial.s0.energies, beta));

  // The exact scheme and exact+NI both measure entropy against the exact free
  // energy; NI uses its own.
  double df_exact = 0.0;
  double df_ni = 0.0;
  if (method == Method::NonInteracting) {
    df_ni = free_energy_delta(initial.s0, initial.sf, beta).value;
  } else {
    df_exact = free_energy_delta(initial.s0, initial.sf, beta).value;
  }
  const EntropyEstimate ds = approx_entropy(scheme, work, beta, df_exact, df_ni);

  WorkEntropyRecord r;
  r.work = work;
  r.extracted_work = -work;
  r.delta_f = method == Method::NonInteracting ? df_ni : df_exact;
  r.delta_s = ds.value;
  r.beta = beta;
  r.drive = drive.kind;
  r.temperature = 1.0 / beta;
  r.interaction = spec.interaction;
  r.tau = drive.tau;
  r.method = method;
  r.steps = prop.steps;
  r.clamped = ds.clamped;
  return r;
}

RelativeError relative_error(double approx, double exact, double epsilon) {
  if (!(epsilon > 0.0)) throw DomainError("relative-error floor must be positive");
  const bool floored = std::abs(exact) < epsilon;
  return {std::abs(approx - exact) / (floored ? epsilon : std::abs(exact)), floored};
}

RelativeErrorMap relative_error_map(const Grid& approx, const Grid& exact, double epsilon) {
  if (approx.values.rows() != exact.values.rows() || approx.values.cols() != exact.values.cols() ||
      approx.interactions != exact.interactions || approx.taus != exact.taus ||
      exact.values.rows() != static_cast<Eigen::Index>(exact.interactions.size()) ||
      exact.values.cols() != static_cast<Eigen::Index>(exact.taus.size())) {
    throw DomainError("relative-error grids differ in shape or coordinates");
  }
  RelativeErrorMap m;
  m.epsilon = epsilon;
  m.error.resize(exact.values.rows(), exact.values.cols());
  m.floored.resize(exact.values.rows(), exact.values.cols());
  for (Eigen::Index i = 0; i < exact.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < exact.values.cols(); ++j) {
      const RelativeError e = relative_error(approx.values(i, j), exact.values(i, j), epsilon);
      m.error(i, j) = e.value;
      m.floored(i, j) = e.floored;
    }
  }
  return m;
}

}  // namespace qwork
