#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace asq {

// Two-electron repulsion integrals in chemist notation (pq|rs), stored as a
// dense n^4 tensor with the full 8-fold permutational symmetry
//   (pq|rs) = (qp|rs) = (pq|sr) = (qp|sr) = (rs|pq) = (sr|pq) = (rs|qp) = (sr|qp)
// maintained by construction: set() writes all equivalent slots at once.
class EriTensor {
public:
    EriTensor() = default;
    explicit EriTensor(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

    int n() const { return n_; }

    double operator()(int p, int q, int r, int s) const { return v_[idx(p, q, r, s)]; }

    // Assign (pq|rs) and the seven symmetry-equivalent entries.
    void set(int p, int q, int r, int s, double value);

    // Max |difference| against the 8-fold symmetry; 0 for tensors built via set().
    double symmetry_defect() const;

    const std::vector<double>& raw() const { return v_; }

private:
    std::size_t idx(int p, int q, int r, int s) const {
        return ((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s;
    }

    int n_ = 0;
    std::vector<double> v_;
};

// One- and two-electron integrals of a (model) Hamiltonian in an orthonormal
// spatial-orbital basis, plus the scalar frame energy and electron counts.
//
//   H = e_core + sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) E_pq E_rs
//
// with E_pq = sum_sigma a^+_{p sigma} a_{q sigma} and (pq|rs) in chemist
// notation (charge distributions pq and rs).
struct IntegralSet {
    int n_orb = 0;
    int n_elec = 0;
    int ms2 = 0;  // 2*Sz of the intended sector
    double e_core = 0.0;
    Eigen::MatrixXd h;  // n_orb x n_orb, symmetric
    EriTensor eri;

    IntegralSet() = default;
    IntegralSet(int n_orb, int n_elec, int ms2 = 0)
        : n_orb(n_orb),
          n_elec(n_elec),
          ms2(ms2),
          h(Eigen::MatrixXd::Zero(n_orb, n_orb)),
          eri(n_orb) {}

    // Largest symmetry violation across h and the ERI tensor.
    double symmetry_defect() const;

    // Throws InvalidInput on inconsistent dimensions/counts or broken symmetry.
    void validate(double tol = 1e-10) const;
};

// Read an FCIDUMP stream: namelist header (NORB, NELEC, MS2; other keys are
// accepted and ignored) terminated by &END or /, then "value i j k l" records
// with 1-based indices.  i j 0 0 is a one-electron element, 0 0 0 0 the core
// energy, anything else a two-electron element (ij|kl).  Duplicate records
// that agree within 1e-12 are tolerated (last one wins); conflicting
// duplicates raise ParseError with the offending line number.
IntegralSet parse_fcidump(std::istream& in);
IntegralSet parse_fcidump_file(const std::string& path);

// Write the canonical FCIDUMP form of the set: unique elements only (8-fold
// canonical representatives), fixed field widths, 17 significant digits so a
// parse round-trip is bit-exact.  Deterministic ordering: ERI block by
// descending pair indices, then one-electron block, then the core energy.
void write_fcidump(const IntegralSet& s, std::ostream& out);
void write_fcidump_file(const IntegralSet& s, const std::string& path);

// Unitary one- and two-index transform into the basis with columns of u as
// new orbitals: h' = u^T h u, (ab|cd)' = sum_pqrs u_pa u_qb u_rc u_sd (pq|rs).
// Throws InvalidInput unless u is orthogonal within tol.
IntegralSet rotate_integrals(const IntegralSet& s, const Eigen::MatrixXd& u,
                             double orth_tol = 1e-8);

// Closed-shell Fock matrix for the determinant occupying `occupied` orbitals
// with two electrons each: F = h + sum_i [2 (pq|ii) - (pi|iq)].
Eigen::MatrixXd closed_shell_fock(const IntegralSet& s, const std::vector<int>& occupied);

// Energy of that closed-shell determinant:
//   e_core + sum_i 2 h_ii + sum_ij [2 (ii|jj) - (ij|ji)].
double closed_shell_energy(const IntegralSet& s, const std::vector<int>& occupied);

// Result of a block re-canonicalization: the rotated integrals plus the
// orthogonal matrix actually applied (block-diagonal over the given groups).
struct Recanonicalized {
    IntegralSet integrals;
    Eigen::MatrixXd u;
    Eigen::VectorXd orbital_energies;  // Fock eigenvalues in the new basis order
};

// Diagonalize the closed-shell Fock matrix within each orbital group (groups
// partition 0..n_orb-1; orbitals keep their group) and rotate the integrals
// accordingly.  Within a group, new orbitals are ordered by ascending Fock
// eigenvalue; signs are fixed by making the largest-magnitude coefficient of
// each column positive (first index wins ties) so the result is deterministic.
Recanonicalized recanonicalize(const IntegralSet& s, const std::vector<int>& occupied,
                               const std::vector<std::vector<int>>& groups);

// Restrict the integral set to the listed orbitals (in the given order),
// folding nothing: caller is responsible for freezing/folding beforehand.
IntegralSet restrict_to(const IntegralSet& s, const std::vector<int>& keep);

// Fold a set of doubly occupied orbitals into the core energy and one-body
// part, removing them from the explicit orbital list:
//   e_core += sum_i [2 h_ii + sum_j (2 (ii|jj) - (ij|ji))]   (i, j frozen)
//   h_pq   += sum_i [2 (pq|ii) - (pi|iq)]                    (p, q kept)
// Returns the reduced set over the complement of `frozen`, preserving
// orbital order, with n_elec reduced by 2 per frozen orbital.
IntegralSet freeze_orbitals(const IntegralSet& s, const std::vector<int>& frozen);

}  // namespace asq
