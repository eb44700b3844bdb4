#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qwork {

// Energies are in units of the hopping J; J = 1 unless overridden.
struct ChainSpec {
  int sites = 2;
  int n_up = 1;
  int n_down = 1;
  double hopping = 1.0;
  double interaction = 0.0;

  static ChainSpec half_filled(int sites, double interaction, double hopping = 1.0);

  void validate() const;
  int particles() const { return n_up + n_down; }
};

using Mask = std::uint32_t;

// Bit i of a mask is site i (0-based; site i+1 in the usual 1..L labelling).
struct BasisState {
  Mask up = 0;
  Mask down = 0;

  auto operator<=>(const BasisState&) const = default;
};

int occupation(const BasisState& s, int site);
int double_occupancy(const BasisState& s);

// Sign picked up by c†_to c_from acting on a single-species mask: (-1) to the
// number of occupied orbitals strictly between the two sites.
int hopping_sign(Mask mask, int from, int to);

class SectorBasis {
 public:
  // Sorts the states into canonical (up, down) lexicographic order. Throws
  // DomainError on duplicates or on bits outside the chain.
  SectorBasis(int sites, std::vector<BasisState> states);

  int sites() const { return sites_; }
  std::size_t dim() const { return states_.size(); }
  std::span<const BasisState> states() const { return states_; }
  const BasisState& operator[](std::size_t i) const { return states_[i]; }
  std::optional<std::size_t> index_of(const BasisState& s) const;

 private:
  int sites_;
  std::vector<BasisState> states_;
};

SectorBasis build_sector_basis(const ChainSpec& spec);

std::vector<int> double_occupancy_diagonal(const SectorBasis& basis);

// Off-diagonal part of a real symmetric operator in compressed-row form.
struct CsrMatrix {
  std::vector<std::uint32_t> row_offsets{0};
  std::vector<std::uint32_t> columns;
  std::vector<double> values;

  std::size_t rows() const { return row_offsets.size() - 1; }
  std::size_t nonzeros() const { return values.size(); }
};

// -J sum over open-chain nearest neighbours and both spins of (c†_i c_{i+1} + h.c.).
CsrMatrix hopping_operator(const SectorBasis& basis, double hopping);

// Per-state value of sum_i v_i n_i.
Eigen::VectorXd onsite_diagonal(const SectorBasis& basis, std::span<const double> potential);

// Hubbard Hamiltonian for one potential configuration. The model has real
// coefficients, so the operator is stored as a real symmetric matrix in both
// sparse (diagonal + CSR off-diagonal) and dense forms.
class HamiltonianMatrix {
 public:
  HamiltonianMatrix(ChainSpec spec, std::vector<double> potential, Eigen::VectorXd diagonal,
                    CsrMatrix off_diagonal);

  std::size_t dim() const { return static_cast<std::size_t>(diagonal_.size()); }
  const ChainSpec& spec() const { return spec_; }
  std::span<const double> potential() const { return potential_; }
  const Eigen::VectorXd& diagonal() const { return diagonal_; }
  const CsrMatrix& off_diagonal() const { return off_diagonal_; }
  const Eigen::MatrixXd& dense() const { return dense_; }

  double max_abs() const;
  double trace() const { return diagonal_.sum(); }

  // H * x using the sparse form.
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& x) const;

 private:
  ChainSpec spec_;
  std::vector<double> potential_;
  Eigen::VectorXd diagonal_;
  CsrMatrix off_diagonal_;
  Eigen::MatrixXd dense_;
};

HamiltonianMatrix assemble_hamiltonian(const SectorBasis& basis, const ChainSpec& spec,
                                       std::span<const double> potential);

}  // namespace qwork
