#include "qwork/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "qwork/errors.hpp"

namespace qwork {

namespace {

constexpr int kMaxSites = 16;

std::vector<Mask> masks_with_popcount(int sites, int count) {
  std::vector<Mask> out;
  const Mask end = Mask{1} << sites;
  for (Mask m = 0; m < end; ++m) {
    if (std::popcount(m) == count) out.push_back(m);
  }
  return out;
}

}  // namespace

ChainSpec ChainSpec::half_filled(int sites, double interaction, double hopping) {
  if (sites % 2 != 0) {
    throw DomainError("half filling needs an even number of sites, got " + std::to_string(sites));
  }
  ChainSpec spec{sites, sites / 2, sites / 2, hopping, interaction};
  spec.validate();
  return spec;
}

void ChainSpec::validate() const {
  if (sites < 2 || sites > kMaxSites) {
    throw DomainError("site count must lie in [2, " + std::to_string(kMaxSites) + "], got " +
                      std::to_string(sites));
  }
  if (n_up < 0 || n_up > sites || n_down < 0 || n_down > sites) {
    throw DomainError("particle counts (" + std::to_string(n_up) + ", " + std::to_string(n_down) +
                      ") do not fit on " + std::to_string(sites) + " sites");
  }
  if (!(hopping > 0.0) || !std::isfinite(hopping)) {
    throw DomainError("hopping J must be positive and finite");
  }
  if (!std::isfinite(interaction)) throw DomainError("interaction U must be finite");
}

int occupation(const BasisState& s, int site) {
  return static_cast<int>((s.up >> site) & 1u) + static_cast<int>((s.down >> site) & 1u);
}

int double_occupancy(const BasisState& s) { return std::popcount(s.up & s.down); }

int hopping_sign(Mask mask, int from, int to) {
  const int lo = std::min(from, to);
  const int hi = std::max(from, to);
  if (hi - lo < 2) return 1;
  // bits lo+1 .. hi-1
  const Mask between = ((Mask{1} << hi) - 1) & ~((Mask{1} << (lo + 1)) - 1);
  return (std::popcount(mask & between) % 2 == 0) ? 1 : -1;
}

SectorBasis::SectorBasis(int sites, std::vector<BasisState> states)
    : sites_(sites), states_(std::move(states)) {
  if (sites < 1 || sites > kMaxSites) throw DomainError("basis site count out of range");
  const Mask limit = Mask{1} << sites;
  for (const auto& s : states_) {
    if (s.up >= limit || s.down >= limit) {
      throw DomainError("basis state has occupied orbitals beyond site " + std::to_string(sites));
    }
  }
  std::sort(states_.begin(), states_.end());
  if (std::adjacent_find(states_.begin(), states_.end()) != states_.end()) {
    throw DomainError("basis states must be unique");
  }
}

std::optional<std::size_t> SectorBasis::index_of(const BasisState& s) const {
  const auto it = std::lower_bound(states_.begin(), states_.end(), s);
  if (it == states_.end() || *it != s) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

SectorBasis build_sector_basis(const ChainSpec& spec) {
  spec.validate();
  const auto ups = masks_with_popcount(spec.sites, spec.n_up);
  const auto downs = masks_with_popcount(spec.sites, spec.n_down);
  std::vector<BasisState> states;
  states.reserve(ups.size() * downs.size());
  for (Mask u : ups) {
    for (Mask d : downs) states.push_back({u, d});
  }
  return SectorBasis(spec.sites, std::move(states));
}

std::vector<int> double_occupancy_diagonal(const SectorBasis& basis) {
  std::vector<int> out;
  out.reserve(basis.dim());
  for (const auto& s : basis.states()) out.push_back(double_occupancy(s));
  return out;
}

CsrMatrix hopping_operator(const SectorBasis& basis, double hopping) {
  CsrMatrix h;
  h.row_offsets.reserve(basis.dim() + 1);
  std::vector<std::pair<std::uint32_t, double>> row;
  for (const auto& s : basis.states()) {
    row.clear();
    for (int spin = 0; spin < 2; ++spin) {
      const Mask m = spin == 0 ? s.up : s.down;
      for (int i = 0; i + 1 < basis.sites(); ++i) {
        const Mask pair = (Mask{1} << i) | (Mask{1} << (i + 1));
        if (std::popcount(m & pair) != 1) continue;
        const int from = (m >> i) & 1u ? i : i + 1;
        const int to = from == i ? i + 1 : i;
        const Mask moved = m ^ pair;
        const BasisState target = spin == 0 ? BasisState{moved, s.down} : BasisState{s.up, moved};
        const auto col = basis.index_of(target);
        if (!col) continue;
        row.emplace_back(static_cast<std::uint32_t>(*col), -hopping * hopping_sign(m, from, to));
      }
    }
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      h.columns.push_back(c);
      h.values.push_back(v);
    }
    h.row_offsets.push_back(static_cast<std::uint32_t>(h.columns.size()));
  }
  return h;
}

Eigen::VectorXd onsite_diagonal(const SectorBasis& basis, std::span<const double> potential) {
  if (potential.size() != static_cast<std::size_t>(basis.sites())) {
    throw DomainError("potential has " + std::to_string(potential.size()) + " entries for a " +
                      std::to_string(basis.sites()) + "-site chain");
  }
  Eigen::VectorXd d(static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    double sum = 0.0;
    for (int i = 0; i < basis.sites(); ++i) sum += potential[i] * occupation(basis[k], i);
    d[static_cast<Eigen::Index>(k)] = sum;
  }
  return d;
}

HamiltonianMatrix::HamiltonianMatrix(ChainSpec spec, std::vector<double> potential,
                                     Eigen::VectorXd diagonal, CsrMatrix off_diagonal)
    : spec_(spec),
      potential_(std::move(potential)),
      diagonal_(std::move(diagonal)),
      off_diagonal_(std::move(off_diagonal)) {
  const auto n = diagonal_.size();
  if (off_diagonal_.rows() != static_cast<std::size_t>(n)) {
    throw DomainError("off-diagonal block has " + std::to_string(off_diagonal_.rows()) +
                      " rows, diagonal has " + std::to_string(n));
  }
  dense_ = diagonal_.asDiagonal();
  for (std::size_t r = 0; r < off_diagonal_.rows(); ++r) {
    for (auto k = off_diagonal_.row_offsets[r]; k < off_diagonal_.row_offsets[r + 1]; ++k) {
      dense_(static_cast<Eigen::Index>(r), off_diagonal_.columns[k]) += off_diagonal_.values[k];
    }
  }
  const double asym = (dense_ - dense_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-14) {
    throw NumericalFailure("assembled Hamiltonian is not Hermitian: max|H - H^T| = " +
                           std::to_string(asym));
  }
}

double HamiltonianMatrix::max_abs() const { return dense_.cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd HamiltonianMatrix::apply(const Eigen::MatrixXcd& x) const {
  if (x.rows() != static_cast<Eigen::Index>(dim())) throw DomainError("operand dimension mismatch");
  Eigen::MatrixXcd y = diagonal_.asDiagonal() * x;
  for (std::size_t r = 0; r < off_diagonal_.rows(); ++r) {
    for (auto k = off_diagonal_.row_offsets[r]; k < off_diagonal_.row_offsets[r + 1]; ++k) {
      y.row(static_cast<Eigen::Index>(r)) += off_diagonal_.values[k] * x.row(off_diagonal_.columns[k]);
    }
  }
  return y;
}

HamiltonianMatrix assemble_hamiltonian(const SectorBasis& basis, const ChainSpec& spec,
                                       std::span<const double> potential) {
  spec.validate();
  if (basis.sites() != spec.sites) {
    throw DomainError("basis has " + std::to_string(basis.sites()) + " sites, spec has " +
                      std::to_string(spec.sites));
  }
  Eigen::VectorXd diag = onsite_diagonal(basis, potential);
  const auto docc = double_occupancy_diagonal(basis);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    diag[static_cast<Eigen::Index>(k)] += spec.interaction * docc[k];
  }
  return HamiltonianMatrix(spec, std::vector<double>(potential.begin(), potential.end()),
                           std::move(diag), hopping_operator(basis, spec.hopping));
}

}  // namespace qwork
